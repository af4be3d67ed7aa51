void edge_detect(int image[36], int edges[4][4])
{
    int i;
    int j;
    int gx;
    int gy;
    #pragma stml iteration_independent
    for (i = 0; i < 4; i++) {
        #pragma stml iteration_independent
        for (j = 0; j < 4; j++) {
            gx = image[i * 6 + (j + 2)] + 2 * image[(i + 1) * 6 + (j + 2)] + image[(i + 2) * 6 + (j + 2)] - image[i * 6 + j] - 2 * image[(i + 1) * 6 + j] - image[(i + 2) * 6 + j];
            gy = image[(i + 2) * 6 + j] + 2 * image[(i + 2) * 6 + (j + 1)] + image[(i + 2) * 6 + (j + 2)] - image[i * 6 + j] - 2 * image[i * 6 + (j + 1)] - image[i * 6 + (j + 2)];
            edges[i][j] = abs(gx) + abs(gy);
        }
    }
}

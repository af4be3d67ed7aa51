void edge_detect(int image[6][6], int edges[4][4])
{
    int i; int j;
    int gx; int gy;
    #pragma stml iteration_independent
    for (i = 0; i < 4; i++) {
        #pragma stml iteration_independent
        for (j = 0; j < 4; j++) {
            gx = image[i][j + 2] + 2 * image[i + 1][j + 2] + image[i + 2][j + 2]
               - image[i][j] - 2 * image[i + 1][j] - image[i + 2][j];
            gy = image[i + 2][j] + 2 * image[i + 2][j + 1] + image[i + 2][j + 2]
               - image[i][j] - 2 * image[i][j + 1] - image[i][j + 2];
            edges[i][j] = abs(gx) + abs(gy);
        }
    }
}

void compress(int image[64], int small[4][4])
{
    int i;
    int j;
    #pragma stml iteration_independent
    for (i = 0; i < 4; i++) {
        for (j = 0; j < 8; j += 2)
            small[2 * i / 2][j / 2] = (image[2 * i * 8 + j] + image[2 * i * 8 + (j + 1)] + image[(2 * i + 1) * 8 + j] + image[(2 * i + 1) * 8 + (j + 1)]) / 4;
    }
}

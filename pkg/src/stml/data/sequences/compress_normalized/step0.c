void compress(int image[8][8], int small[4][4])
{
    int i;
    int j;
    #pragma stml iteration_independent
    for (i = 0; i < 8; i += 2) {
        for (j = 0; j < 8; j += 2)
            small[i / 2][j / 2] = (image[i][j] + image[i][j + 1] + image[i + 1][j] + image[i + 1][j + 1]) / 4;
    }
}

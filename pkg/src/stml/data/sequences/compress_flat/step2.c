void compress(int image[64], int small[16])
{
    int i;
    int j;
    #pragma stml iteration_independent
    for (i = 0; i < 8; i += 2) {
        for (j = 0; j < 8; j += 2)
            small[i / 2 * 4 + j / 2] = (image[i * 8 + j] + image[i * 8 + (j + 1)] + image[(i + 1) * 8 + j] + image[(i + 1) * 8 + (j + 1)]) / 4;
    }
}

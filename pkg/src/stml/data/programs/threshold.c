void threshold(int pixels[16], int mask[8], int level)
{
    int i; int k;
    k = 0;
    for (i = 0; i < 16; i += 2) {
        if (pixels[i] + pixels[i + 1] > 2 * level)
            mask[k] = 1;
        else
            mask[k] = 0;
        k++;
    }
}

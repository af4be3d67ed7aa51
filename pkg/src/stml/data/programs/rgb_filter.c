void rgb_filter(int rgb[4][3], int red[4], int green[4], int blue[4])
{
    int i;
    #pragma stml iteration_independent
    for (i = 0; i < 4; i++) {
        red[i] = rgb[i][0];
        green[i] = rgb[i][1];
        blue[i] = rgb[i][2];
    }
}

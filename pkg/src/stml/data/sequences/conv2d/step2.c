void conv2d(float input_image[25], float kernel[9], float output_image[3][3])
{
    int i;
    int j;
    int ki;
    int kj;
    float sum;
    #pragma stml iteration_independent
    for (i = 0; i < 3; i++) {
        #pragma stml iteration_independent
        for (j = 0; j < 3; j++) {
            sum = 0.0;
            for (ki = 0; ki < 3; ki++)
                for (kj = 0; kj < 3; kj++)
                    sum += input_image[(i + ki) * 5 + (j + kj)] * kernel[ki * 3 + kj];
            output_image[i][j] = sum;
        }
    }
}

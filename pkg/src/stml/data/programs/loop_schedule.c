void loop_schedule(int v[12], int w[3])
{
    int i; int j;
    int M; int N;
    M = 3;
    N = 4;
    #pragma stml loop_schedule
    for (j = 0; j < M; j++) {
        w[j] = 0;
        for (i = 0; i < N; i++)
            w[j] += v[j * N + i];
    }
}

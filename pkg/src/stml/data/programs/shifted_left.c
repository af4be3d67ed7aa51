void shifted_left(int v[17], int N)
{
    int i;
    for (i = 1; i < N; i += 2) {
        v[i] = v[i - 1];
        v[i + 1] = v[i - 1] * i;
    }
}

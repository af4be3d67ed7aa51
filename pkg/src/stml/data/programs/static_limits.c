void static_limits(int v[16], int N)
{
    int i; int j;
    for (j = 0; j < N; j++) {
        for (i = 0; i < size(v); i++)
            update(v, i);
        clean(v);
    }
}

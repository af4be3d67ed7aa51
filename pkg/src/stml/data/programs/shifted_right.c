void shifted_right(int v[17], int N)
{
    int i; int aux;
    for (i = 0; i < N - 1; i++) {
        aux = i * i;
        v[i + 1] = aux;
    }
}

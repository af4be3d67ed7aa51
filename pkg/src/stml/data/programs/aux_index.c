void aux_index(int v[8], int w[8])
{
    int j; int aux;
    aux = 0;
    for (j = 0; j < 8; j++) {
        w[j] = v[aux];
        aux++;
    }
}

double myTable[5002][5002], myTableOut[5002][5002];

#pragma hmpp _instr_for_ol_5_main codelet, target=CUDA, args[myTable].io=inout, &
#pragma hmpp & args[diffsum_reduced].size=1, args[*].transfer=auto
void _instr_for_ol_5_main(int i, int j, double myTableOut[5002][5002], double myTable[5002][5002], double *diffsum_reduced) {
    double diffsum = *diffsum_reduced;
#pragma hmppcg gridify(1, j), reduce(+:diffsum)
    for (i = 1; i < (1 + 5000 + 1) - 1; i++) {
        for (j = 1; j < (1 + 5000 + 1) - 1; j++) {
            double diff = myTableOut[i][j] - myTable[i][j];
            double diffmul = diff * diff;
            diffsum += diffmul;
            myTable[i][j] = myTableOut[i][j];
        }
    }
    *diffsum_reduced = diffsum;
}

int main() {
    int i, j;
    double diffsum = 0;
#pragma hmpp _instr_for_ol_5_main callsite
    _instr_for_ol_5_main(i, j, myTableOut, myTable, &diffsum);
    printf("%g\n", diffsum);
    return 0;
}

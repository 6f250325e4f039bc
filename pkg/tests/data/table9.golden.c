int deletedFunctionBodyNamed_g = 1;

int deletedFunctionBodyNamed_f = 1;

int main() {
    int l;
    int x = 2;
    int _p_0_f_0 = 1;
    int _return_0;
    {
        int ret_f0;
        ret_f0 = _p_0_f_0 + 1;
        _return_0 = ret_f0;
    }
    int _p_0_f_1 = 2;
    int _return_1;
    {
        int ret_f1;
        ret_f1 = _p_0_f_1 + 1;
        _return_1 = ret_f1;
    }
    int *_p_0_g_2 = &x;
    int _p_1_g_2 = 6;
    int _return_2;
    {
        int r = 2;
        int c = 1;
        *_p_0_g_2 = *_p_0_g_2 + r * 2;
        int ret = *_p_0_g_2 + _p_1_g_2 + c + r * 2;
        int ret_g2;
        ret_g2 = ret;
        _return_2 = ret_g2;
    }
    l = _return_0 + _return_1 + _return_2;
    int *_p_0_g_3 = &x;
    int _p_1_g_3 = 2;
    int _return_3;
    {
        int r = 2;
        int c = 1;
        *_p_0_g_3 = *_p_0_g_3 + r * 2;
        int ret = *_p_0_g_3 + _p_1_g_3 + c + r * 2;
        int ret_g3;
        ret_g3 = ret;
        _return_3 = ret_g3;
    }
    l = l * _return_3;
    return l;
}

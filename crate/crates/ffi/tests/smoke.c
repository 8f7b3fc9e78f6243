#include <stdio.h>
#include "tritangle.h"

int main(void) {
    TtState *s = NULL;
    TtWitness *w = NULL;
    double g = 0.0, d = 1.0;
    TtVerdict v;
    if (tt_state_family(TT_FAMILY_GI, 0.0, 0.15, &s) != TT_STATUS_OK) return 1;
    if (tt_maximize_witness(s, TT_BASIS_GI, 1000.0, 0, &w) != TT_STATUS_OK) return 2;
    tt_witness_g_value(w, &g);
    tt_witness_d_min(w, &d);
    if (tt_certify(w, 1e-5, &v) != TT_STATUS_OK || v != TT_VERDICT_GLOBAL) return 3;
    if (tt_state_family(TT_FAMILY_GWI, 0.8, 0.5, &s) != TT_STATUS_INVALID_ARGUMENT &&
        tt_last_error() == NULL) return 4;
    printf("%.6f %.3e\n", g, d);
    tt_witness_free(w);
    tt_state_free(s);
    return 0;
}

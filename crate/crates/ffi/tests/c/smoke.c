#include <math.h>
#include <stdio.h>
#include "kinetic_bte.h"

int main(void) {
    KbteDomain *d = NULL;
    KbtePotential *p = NULL;
    if (kbte_domain_ball(1.0, &d) != KBTE_STATUS_OK) return 1;
    if (kbte_potential_zero(&p) != KBTE_STATUS_OK) return 2;
    double x[3] = {0.0, 0.0, 0.0}, v[3] = {1.0, 0.0, 0.0};
    double tb = 0.0, xb[3], vb[3];
    if (kbte_backward_exit(d, p, x, v, &tb, xb, vb) != KBTE_STATUS_OK) return 3;
    if (fabs(tb - 1.0) > 1e-9 || fabs(xb[0] + 1.0) > 1e-9) return 4;
    if (kbte_domain_ball(-1.0, NULL) != KBTE_STATUS_NULL_POINTER) return 5;
    KbteDomain *bad = NULL;
    if (kbte_domain_ball(-1.0, &bad) != KBTE_STATUS_VALIDATION || kbte_last_error() == NULL) return 6;
    printf("%s %.1f\n", kbte_version(), kbte_beta_c());
    kbte_potential_free(p);
    kbte_domain_free(d);
    return 0;
}

#include <math.h>
#include <stdio.h>

#include "biexciton.h"

int main(void) {
    BxModelParams p = {200, 1.0, 4.0, 0.0, 2.5};
    double e = 0.0;
    if (bx_exciton_bound_energy(&p, &e) != BX_STATUS_OK) return 10;
    if (fabs(e - 3.2016) > 1e-3) return 11;

    BxModelParams q = {40, 1.0, 4.1, 1000.0, 4.0};
    BxProjected *h = NULL;
    if (bx_projected_new(&q, &h) != BX_STATUS_OK) return 12;
    size_t count = 0;
    if (bx_projected_bound_count(h, &count) != BX_STATUS_OK || count != 4) return 13;
    double vals[40];
    if (bx_projected_eigenvalues(h, vals, 10) != BX_STATUS_BUFFER_TOO_SMALL) return 14;
    if (bx_projected_eigenvalues(h, vals, 40) != BX_STATUS_OK) return 15;
    bx_projected_free(h);

    BxModelParams bad = {40, 1.0, 2.0, 0.0, 4.0};
    BxPole pole;
    if (bx_find_pole(&bad, &pole) != BX_STATUS_REGIME) return 16;
    char msg[256];
    if (bx_last_error_message(msg, sizeof msg) == 0) return 17;

    printf("ok %s %.4f\n", bx_version(), e);
    return 0;
}

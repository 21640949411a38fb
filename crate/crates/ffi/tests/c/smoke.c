#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ringgraph.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "line %d: %s\n", __LINE__, #cond); return 1; } } while (0)

int main(void) {
    RgRingParams p = rg_ring_params_default(0.6);
    p.gamma_half = 0.18;
    RgNetlist *net = NULL;
    CHECK(rg_ring_new(&p, &net) == RG_STATUS_OK);

    RgSpectrum *spec = NULL;
    CHECK(rg_sweep(net, 8e9, 9e9, 101, &spec) == RG_STATUS_OK);
    size_t n = rg_spectrum_len(spec);
    CHECK(n == 101 && rg_spectrum_ports(spec) == 2);

    double asym[101];
    CHECK(rg_asymmetry(spec, asym, n) == RG_STATUS_OK);
    double mean = 0.0;
    for (size_t k = 0; k < n; k++) mean += asym[k] / (double)n;
    CHECK(mean > 0.1);

    double s21[202];
    CHECK(rg_spectrum_element(spec, 1, 0, s21, 2 * n) == RG_STATUS_OK);
    CHECK(hypot(s21[0], s21[1]) <= 1.0);

    CHECK(rg_spectrum_element(spec, 1, 0, s21, n) == RG_STATUS_INVALID_ARGUMENT);
    CHECK(strstr(rg_last_error(), "required") != NULL);

    rg_spectrum_free(spec);
    rg_netlist_free(net);
    printf("mean asymmetry %.4f\n", mean);
    return 0;
}

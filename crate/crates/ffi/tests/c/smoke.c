#include <math.h>
#include <stdio.h>
#include <string.h>

#include "pauli_shield.h"

int main(void) {
    /* two orthonormal columns embedded in three rows: F = 1 */
    const double re[6] = {1, 0, 0, 1, 0, 0};
    const double im[6] = {0, 0, 0, 0, 0, 0};
    double f = -1;
    if (ps_fidelity_fast(re, im, 3, 2, &f) != PS_STATUS_OK || fabs(f - 1) > 1e-12) {
        fprintf(stderr, "fast fidelity %g\n", f);
        return 1;
    }
    if (ps_fidelity_fast(NULL, im, 3, 2, &f) != PS_STATUS_NULL_POINTER || ps_last_error() == NULL) {
        return 2;
    }
    PsSweep *sweep = NULL;
    if (ps_sweep_from_config("task = nonsense\n", &sweep) != PS_STATUS_CONFIG) {
        return 3;
    }
    const char *config = "task = expansion\nlambda = 0\naxis = N\naxis_values = 1:3\n";
    PsSweepResult *result = NULL;
    size_t rows = 0;
    if (ps_sweep_from_config(config, &sweep) != PS_STATUS_OK ||
        ps_sweep_run(sweep, &result) != PS_STATUS_OK ||
        ps_sweep_result_len(result, &rows) != PS_STATUS_OK || rows != 3) {
        fprintf(stderr, "%s\n", ps_last_error());
        return 4;
    }
    char *csv = NULL;
    if (ps_sweep_result_csv(result, &csv) != PS_STATUS_OK || strncmp(csv, "N,lambda,delta_E\n", 17) != 0) {
        return 5;
    }
    printf("%s", csv);
    ps_string_free(csv);
    ps_sweep_result_free(result);
    ps_sweep_free(sweep);
    return 0;
}

#include <math.h>
#include <stdio.h>

#include "scnls.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        ScnlsStatus s_ = (call);                                             \
        if (s_ != SCNLS_STATUS_OK) {                                         \
            const char *m_ = scnls_last_error();                             \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, m_ ? m_ : ""); \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    ScnlsGrid *grid = NULL;
    ScnlsField *field = NULL, *evolved = NULL;
    ScnlsSolveStats stats;
    double x0 = 0.0, k0 = 0.5, mass = 0.0, sup = 0.0;

    CHECK(scnls_grid_new(1, 1024, 8.0, &grid));
    CHECK(scnls_field_coherent_state(grid, 0.1, 1.0, &x0, &k0, &field));
    CHECK(scnls_solve(field, 1.0, 0.01, 0.25, 0.0, &evolved, &stats));
    CHECK(scnls_field_mass(evolved, &mass));
    CHECK(scnls_wigner_sup(evolved, &sup));
    if (fabs(mass - 1.0) > 1e-10 || fabs(sup - 1.0) > 1e-10) {
        fprintf(stderr, "mass %g, sup %g\n", mass, sup);
        return 1;
    }
    if (scnls_grid_new(1, 64, 8.0, NULL) != SCNLS_STATUS_NULL_POINTER) {
        return 1;
    }
    printf("ok %s steps=%llu\n", scnls_version(), (unsigned long long)stats.steps);
    scnls_field_free(evolved);
    scnls_field_free(field);
    scnls_grid_free(grid);
    return 0;
}

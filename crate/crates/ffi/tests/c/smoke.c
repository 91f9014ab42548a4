#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "osccomp.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        OscStatus s_ = (call);                                             \
        if (s_ != OSC_STATUS_OK) {                                         \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,              \
                    osc_last_error_message());                             \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(int argc, char **argv) {
    const char *out_path = argc > 1 ? argv[1] : "smoke.csv";
    const char *overrides[] = {"duration=1.0", "noise.seed=3"};
    OscTrace *trace = NULL;
    CHECK(osc_run_scenario("pi-plus-power", NULL, overrides, 2, &trace));

    size_t rows = 0;
    CHECK(osc_trace_rows(trace, &rows));
    double *t = malloc(rows * sizeof(double));
    size_t written = 0;
    CHECK(osc_trace_column(trace, "t", t, rows, &written));
    if (written != rows || t[1] != 5e-4) {
        fprintf(stderr, "bad time column\n");
        return 1;
    }
    char seed[32];
    size_t needed = 0;
    CHECK(osc_trace_meta(trace, "config.noise.seed", seed, sizeof seed, &needed));
    if (strcmp(seed, "3") != 0) {
        fprintf(stderr, "seed echo %s\n", seed);
        return 1;
    }
    CHECK(osc_trace_write(trace, out_path));

    double k_max = 0.0;
    CHECK(osc_gain_bound(NULL, 0, NULL, 0, 16.2692, &k_max));
    double delay = 0.0;
    CHECK(osc_sync_delay(16.27, 2.0, 1.0, &delay));

    OscStatus s = osc_trace_column(trace, "nope", t, rows, &written);
    if (s != OSC_STATUS_INVALID_ARGUMENT || strstr(osc_last_error_message(), "nope") == NULL) {
        fprintf(stderr, "missing column not reported\n");
        return 1;
    }

    OscEstimator *est = NULL;
    CHECK(osc_estimator_new(0.075, 1.5e5, 10.0, 0, 17.0, 5e-4, &est));
    OscEstimate e;
    for (int n = 0; n < 20000; n++) {
        double tn = n * 5e-4;
        CHECK(osc_estimator_update(est, 0.01 + 1e-3 * sin(16.27 * tn), tn, &e));
    }
    osc_estimator_free(est);
    osc_trace_free(trace);
    free(t);
    printf("rows=%zu k_max=%.4f delay=%.4f omega_hat=%.3f ready=%d\n", rows, k_max, delay,
           e.omega_hat, e.ready);
    return fabs(e.omega_hat - 16.27) < 0.1 ? 0 : 1;
}

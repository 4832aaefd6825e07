/* Minimal consumer of the C API: run the benchmark and print the
 * summary. Build (from the workspace root):
 *
 *   cargo build --release -p cotrans-ffi
 *   cc crates/cotrans-ffi/examples/smoke.c \
 *      -Icrates/cotrans-ffi/include \
 *      target/release/libcotrans_ffi.a -lpthread -ldl -lm -o smoke
 */
#include <stdio.h>
#include "cotrans.h"

int main(void) {
    CtConfig *config = ct_config_default();
    CtScenario *scenario = NULL;
    CtStatus status = ct_scenario_benchmark(config, &scenario);
    if (status != CT_STATUS_OK) {
        fprintf(stderr, "scenario: %s\n", ct_last_error_message());
        return 1;
    }
    CtRunMetrics metrics;
    status = ct_run(scenario, config, "png-lf", 1, NULL, &metrics);
    if (status != CT_STATUS_OK) {
        fprintf(stderr, "run: %s\n", ct_last_error_message());
        return 1;
    }
    printf("version %s: %zu steps, completed=%d\n", ct_version(),
           metrics.steps, (int)metrics.completed);
    printf("max |l - 0.65| = %.3e m, follower convergence %.1f%%\n",
           metrics.max_load_length_deviation,
           100.0 * metrics.follower_converged_fraction);
    ct_scenario_free(scenario);
    ct_config_free(config);
    return 0;
}

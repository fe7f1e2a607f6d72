#include <stdio.h>
#include <string.h>

#include "phasefield_mfmc.h"

static const char *STATS =
    "# c1_seconds=2\n"
    "model,h,delta,rho,cost_ratio,sigma\n"
    "1,0.1,0.25,1,1,1\n"
    "2,0.2,0.25,0.9,0.01,1.1\n";

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    PfmStats *stats = NULL;
    CHECK(pfm_stats_from_csv(STATS, &stats) == PFM_STATUS_OK);
    CHECK(pfm_stats_len(stats) == 2);

    size_t ids[2] = {1, 2};
    double bmin = 0.0;
    CHECK(pfm_minimum_budget(stats, ids, 2, &bmin) == PFM_STATUS_OK);

    PfmPlan *plan = NULL;
    CHECK(pfm_allocate(stats, ids, 2, 10.0 * bmin, &plan) == PFM_STATUS_OK);
    uint64_t m[2];
    size_t len = 0;
    CHECK(pfm_plan_counts(plan, m, 2, &len) == PFM_STATUS_OK);
    CHECK(len == 2 && m[0] == 10 && m[1] > m[0]);

    PfmPlan *none = NULL;
    CHECK(pfm_allocate(stats, ids, 2, 1e-6, &none) == PFM_STATUS_INSUFFICIENT_BUDGET);
    char msg[256];
    CHECK(pfm_last_error_message(msg, sizeof msg) > 0);
    CHECK(strstr(msg, "guard") != NULL);

    pfm_plan_free(plan);
    pfm_stats_free(stats);
    printf("ok %s\n", pfm_version());
    return 0;
}

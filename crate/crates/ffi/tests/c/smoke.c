#include <stdio.h>
#include <string.h>
#include "earsim.h"

int main(void) {
    double w[2] = {0.5, 0.5};
    double lambda = 0.0;
    if (earsim_lambda(EARSIM_SCHEME_EAR, w, 2, &lambda) != EARSIM_STATUS_OK) return 1;
    if (lambda < 0.6666 || lambda > 0.6667) return 2;

    EarsimTrial *trial = NULL;
    if (earsim_trial_run(EARSIM_SCHEME_NC_ARQ, w, 2, 500, 1, 0, &trial) != EARSIM_STATUS_OK) return 3;
    EarsimTrialStats stats;
    if (earsim_trial_stats(trial, &stats) != EARSIM_STATUS_OK || !stats.clean) return 4;
    earsim_trial_free(trial);

    double bad[1] = {0.5};
    if (earsim_trial_run(EARSIM_SCHEME_EAR, bad, 1, 10, 1, 0, &trial) == EARSIM_STATUS_OK) return 5;
    if (trial != NULL || earsim_last_error() == NULL) return 6;

    EarsimExperiment *x = NULL;
    if (earsim_experiment_run("packets = 50\ntrials = 2\nschemes = [\"ear\"]\n", &x) != EARSIM_STATUS_OK) return 7;
    size_t needed = 0;
    if (earsim_experiment_csv(x, NULL, 0, &needed) != EARSIM_STATUS_BUFFER_TOO_SMALL) return 8;
    char buf[4096];
    if (needed > sizeof buf || earsim_experiment_csv(x, buf, sizeof buf, &needed) != EARSIM_STATUS_OK) return 9;
    earsim_experiment_free(x);
    if (strncmp(buf, "scheme,N,", 9) != 0) return 10;
    printf("%.6f %llu\n", lambda, (unsigned long long)stats.retransmissions);
    return 0;
}

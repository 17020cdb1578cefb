#include <math.h>
#include <stdio.h>
#include "frontwave.h"

int main(void) {
    const char *cfg =
        "[surface]\nkind = \"flat_torus\"\n"
        "[hamiltonian]\nkind = \"geodesic\"\nE = 0.5\n"
        "[point]\ntheta = 0.1\ns = 0.4\n";
    FwModel *m = NULL;
    if (fw_model_new(cfg, &m) != FW_STATUS_OK) return 1;
    double lambda = 0.0;
    if (fw_lambda(m, &lambda) != FW_STATUS_OK) return 2;
    double t[2] = {1.0, 3.0}, len[2];
    if (fw_front_lengths(m, t, 2, len) != FW_STATUS_OK) return 3;
    fw_model_free(m);
    if (fw_model_new("[surface]\n", &m) != FW_STATUS_CONFIG) return 4;
    char msg[256];
    fw_last_error_message(msg, sizeof msg);
    printf("%s %.12f %.12f\n", fw_version(), lambda, len[1]);
    return fabs(lambda - 2.0 * M_PI) < 1e-9 && fabs(len[1] - 6.0 * M_PI) < 1e-8 && msg[0] ? 0 : 5;
}

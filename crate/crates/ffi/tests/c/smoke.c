#include <stdio.h>
#include <string.h>

#include "curved_tube.h"

int main(void) {
    CtCurvature bump = { CT_CURVATURE_KIND_BUMP, 0.5, 4.0 };
    CtTube *tube = NULL;
    if (ct_tube_new_strip(bump, 0.5, &tube) != CT_STATUS_OK) return 1;

    CtTubeInfo info;
    if (ct_tube_info(tube, &info) != CT_STATUS_OK || info.dimension != 2) return 2;

    double values[3];
    size_t n = 0;
    if (ct_lowest_eigenvalues(tube, 10.0, 0.125, 0.125, CT_VARIANT_FORM, 3, 0, values, 3, &n) != CT_STATUS_OK) return 3;
    if (n != 3 || !(values[0] < info.mu1)) return 4;

    CtCertificate cert;
    if (ct_certify(tube, NULL, 0, &cert) != CT_STATUS_OK || cert.verdict != CT_VERDICT_CERTIFIED) return 5;
    ct_tube_free(tube);

    CtCurvature fat = { CT_CURVATURE_KIND_CONSTANT, 1.5, 0.0 };
    CtStatus st = ct_tube_new_strip(fat, 1.0, &tube);
    char msg[256];
    size_t len = ct_last_error_message(msg, sizeof msg);
    if (st != CT_STATUS_ASSUMPTION_VIOLATION || tube != NULL || len < 2 || strstr(msg, "assumption") == NULL) return 6;

    printf("lambda1 %.6f mu1 %.6f certified at %llu (%s)\n", values[0], info.mu1,
           (unsigned long long)cert.certified_at, ct_status_name(st));
    return 0;
}

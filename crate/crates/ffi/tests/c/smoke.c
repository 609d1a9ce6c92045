#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "listdec.h"

#define M 400
#define D 2

int main(void) {
    double pts[M * D];
    for (int i = 0; i < M; i++) {
        double s = i < M / 2 ? 1.0 : 100.0;
        pts[i * D] = s * sin(0.37 * i + 0.1);
        pts[i * D + 1] = s * cos(1.91 * i);
    }

    ListdecResult *r = NULL;
    ListdecStatus st = listdec_estimate(pts, M, D, 0.5, 3, &r);
    if (st != LISTDEC_STATUS_OK || r == NULL) {
        fprintf(stderr, "estimate failed: %d %s\n", (int)st, listdec_last_error_message());
        return 1;
    }
    size_t n = listdec_result_len(r);
    if (n == 0 || listdec_result_dim(r) != D) {
        fprintf(stderr, "bad result shape\n");
        return 1;
    }
    size_t total = 0;
    for (size_t k = 0; k < n; k++) {
        size_t size = 0;
        if (listdec_hypothesis_size(r, k, &size) != LISTDEC_STATUS_OK) return 1;
        size_t *idx = malloc(size * sizeof *idx);
        double cov[D * D];
        if (listdec_hypothesis_indices(r, k, idx, size) != LISTDEC_STATUS_OK) return 1;
        if (listdec_hypothesis_covariance(r, k, cov, D * D) != LISTDEC_STATUS_OK) return 1;
        if (cov[1] != cov[2]) return 1;
        free(idx);
        total += size;
    }
    if (total > M) return 1;

    char *trace = listdec_result_trace_json(r);
    if (trace == NULL || strstr(trace, "\"nodes\"") == NULL) return 1;
    listdec_string_free(trace);
    listdec_result_free(r);

    st = listdec_estimate(pts, M, D, 0.9, 3, &r);
    if (st != LISTDEC_STATUS_INVALID_CONFIG || r != NULL || listdec_last_error_message() == NULL) {
        fprintf(stderr, "expected a config error\n");
        return 1;
    }
    printf("ok %zu hypotheses, version %s\n", n, listdec_version());
    return 0;
}

/* End-to-end exercise of the C API: config -> matrix -> embedding, plus the
 * error path. Build against the static library:
 *
 *   cargo build -p fmds-capi
 *   cc -Wall -o smoke examples/smoke.c -Iinclude \
 *      ../../target/debug/libfmds_capi.a -lm -lpthread -ldl
 *   ./smoke
 */
#include <stdio.h>
#include <stdlib.h>
#include "fmds.h"

int main(void) {
    const char *config =
        "{\"seed\": 1,"
        " \"model\": {\"family\": {\"kind\": \"normal_location\", \"params\": {\"dim\": 1}},"
        "   \"thetas\": {\"kind\": \"grid\", \"lo\": [0.0], \"hi\": [3.0], \"counts\": [7]}},"
        " \"dissimilarity\": {\"metric\": \"wasserstein2\", \"route\": \"auto\"},"
        " \"mode\": {\"mode\": \"population\"}}";

    FmdsMatrix *m = NULL;
    if (fmds_matrix_from_config_json(config, &m) != FMDS_OK) {
        fprintf(stderr, "config: %s\n", fmds_last_error_message());
        return 1;
    }
    size_t n = fmds_matrix_size(m);

    FmdsEmbedding *e = NULL;
    if (fmds_classical_scaling(m, 1, &e) != FMDS_OK) {
        fprintf(stderr, "cs: %s\n", fmds_last_error_message());
        return 1;
    }
    double *coords = malloc(n * sizeof(double));
    if (fmds_embedding_coords(e, coords, n) != FMDS_OK) return 1;
    double s = -1.0;
    if (fmds_embedding_stress(e, m, &s) != FMDS_OK) return 1;

    printf("version %s, n=%zu, stress=%.3e, span=%.6f\n",
           fmds_version(), n, s, coords[n - 1] - coords[0]);

    /* error path: the message must survive the boundary */
    FmdsMatrix *bad = NULL;
    int code = fmds_matrix_from_config_json("{\"seed\": []}", &bad);
    printf("bad config -> code %d, message: %s\n", code, fmds_last_error_message());

    free(coords);
    fmds_embedding_free(e);
    fmds_matrix_free(m);
    return (code == FMDS_ERR_PARSE && s < 1e-9) ? 0 : 1;
}

#include <stdio.h>
#include <string.h>

#include "dcstyle.h"

#define CHECK(call)                                                       \
    do {                                                                  \
        DcsStatus s_ = (call);                                            \
        if (s_ != DCS_STATUS_OK) {                                        \
            fprintf(stderr, "%s failed: %d %s\n", #call, (int)s_,         \
                    dcs_last_error() ? dcs_last_error() : "");            \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    enum { H = 16, W = 24 };
    static uint8_t rgb[H * W * 3];
    for (size_t i = 0; i < sizeof rgb; i++) rgb[i] = (uint8_t)(i * 37u);

    DcsEngine *engine = NULL;
    DcsImage *content = NULL, *style = NULL, *out = NULL, *recon = NULL;
    CHECK(dcs_engine_synthetic(5, &engine));
    CHECK(dcs_image_from_rgb(H, W, rgb, sizeof rgb, &content));
    CHECK(dcs_image_from_rgb(H, W, rgb, sizeof rgb, &style));

    DcsParams params = dcs_params_default();
    params.alpha = 0.0f;
    const DcsImage *styles[1] = {style};
    CHECK(dcs_stylize(engine, content, styles, NULL, 1, NULL, NULL, &params, &out));
    CHECK(dcs_reconstruct(engine, content, &recon));

    size_t n_out = 0, n_recon = 0;
    const uint8_t *a = dcs_image_pixels(out, &n_out);
    const uint8_t *b = dcs_image_pixels(recon, &n_recon);
    if (dcs_image_width(out) != W || dcs_image_height(out) != H || n_out != n_recon ||
        memcmp(a, b, n_out) != 0) {
        fprintf(stderr, "alpha = 0 output differs from reconstruction\n");
        return 1;
    }

    DcsImage *bad = NULL;
    if (dcs_image_from_rgb(H, W, rgb, 5, &bad) != DCS_STATUS_INVALID_INPUT || bad != NULL ||
        dcs_last_error() == NULL) {
        fprintf(stderr, "expected invalid-input status\n");
        return 1;
    }

    dcs_image_free(recon);
    dcs_image_free(out);
    dcs_image_free(style);
    dcs_image_free(content);
    dcs_engine_free(engine);
    printf("ok %s\n", dcs_version());
    return 0;
}

#include "deep.h"
#include "../util.h"

int apply_clamp(int i) {
    int j = clamp_idx(i, 16);
    log_msg("clamped");
    return j;
}

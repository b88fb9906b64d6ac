#include "util.h"

int common_fn(int x) {
    log_msg("variant a");
    return x * 2;
}

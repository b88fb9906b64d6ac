#include "util.h"

int step(int depth) {
    if (depth <= 0) {
        return 0;
    }
    log_msg("step");
    return step(depth - 1);
}

void run_worker(int id) {
    step(id % 4);
}

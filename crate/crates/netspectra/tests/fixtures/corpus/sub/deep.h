#ifndef DEEP_H
#define DEEP_H

static inline int clamp_idx(int i, int n) {
    if (i < 0) {
        return 0;
    }
    if (i >= n) {
        return n - 1;
    }
    return i;
}

#endif

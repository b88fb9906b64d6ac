#include "../util.h"

int common_fn(int x) {
    alloc_table(x);
    return x + 1;
}

#include <stdio.h>
#include <stdlib.h>
#include "util.h"

static int *table;

void alloc_table(int n) {
    table = calloc((size_t)n, sizeof(int));
}

void log_msg(const char *msg) {
    fprintf(stderr, "[pcn] %s\n", msg);
}

#include <stdio.h>

char *format_entry(int id) {
    static char buf[32];
    sprintf(buf, "%d", id);
    printf("formatted %d\n", id);
    return buf;
}

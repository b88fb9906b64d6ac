#ifndef UTIL_H
#define UTIL_H

void init_system(void);
void alloc_table(int n);
void log_msg(const char *msg);

#endif

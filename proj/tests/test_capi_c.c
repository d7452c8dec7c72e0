#include "gardner.h"
int main(void) { return 0; }

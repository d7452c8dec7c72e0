#include "doctest.h"

TEST_SUITE_BEGIN("pretrain");

TEST_SUITE_END();

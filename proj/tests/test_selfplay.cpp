#include "doctest.h"

TEST_SUITE_BEGIN("selfplay");

TEST_SUITE_END();

#include "doctest.h"

TEST_SUITE_BEGIN("arena");

TEST_SUITE_END();

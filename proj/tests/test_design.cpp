#include <doctest.h>

TEST_SUITE("design") {

}  // TEST_SUITE

#include <doctest.h>

TEST_SUITE("epidemic") {

}  // TEST_SUITE

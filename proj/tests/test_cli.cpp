#include <doctest.h>

TEST_SUITE("cli") {

}  // TEST_SUITE

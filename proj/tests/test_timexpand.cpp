#include <doctest.h>

TEST_SUITE("timexpand") {

}  // TEST_SUITE

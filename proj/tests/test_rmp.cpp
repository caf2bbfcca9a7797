#include <doctest.h>

TEST_SUITE("rmp") {

}  // TEST_SUITE

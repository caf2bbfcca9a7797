#include <doctest.h>

TEST_SUITE("sweep") {

}  // TEST_SUITE

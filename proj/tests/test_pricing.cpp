#include <doctest.h>

TEST_SUITE("pricing") {

}  // TEST_SUITE

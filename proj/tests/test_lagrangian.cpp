#include <doctest.h>

TEST_SUITE("lagrangian") {

}  // TEST_SUITE

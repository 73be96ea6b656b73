// Builds the amalgamated Catch2 distribution (with its bundled main) into a
// static library the test binaries link against.
#include <catch2/catch_amalgamated.cpp>

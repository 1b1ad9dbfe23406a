#include <catch2/catch_amalgamated.hpp>
#include "reslogit/reslogit.hpp"

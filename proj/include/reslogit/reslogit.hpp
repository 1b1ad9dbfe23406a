#pragma once

// Umbrella header for the whole toolkit.

#include "reslogit/config.hpp"
#include "reslogit/csv.hpp"
#include "reslogit/demo.hpp"
#include "reslogit/design.hpp"
#include "reslogit/grad.hpp"
#include "reslogit/math.hpp"
#include "reslogit/model.hpp"
#include "reslogit/report.hpp"
#include "reslogit/stats.hpp"
#include "reslogit/train.hpp"
#include "reslogit/types.hpp"

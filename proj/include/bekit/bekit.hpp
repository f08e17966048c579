#pragma once

// Umbrella header for the whole toolkit.

#include "bekit/bounds.hpp"
#include "bekit/chaos.hpp"
#include "bekit/dist.hpp"
#include "bekit/error.hpp"
#include "bekit/experiments.hpp"
#include "bekit/graph.hpp"
#include "bekit/hoeffding.hpp"
#include "bekit/json_io.hpp"
#include "bekit/linalg.hpp"
#include "bekit/mc.hpp"
#include "bekit/parallel.hpp"
#include "bekit/qform.hpp"
#include "bekit/rng.hpp"
#include "bekit/space.hpp"
#include "bekit/ustat.hpp"

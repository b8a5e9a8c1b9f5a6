#pragma once

#include "voroperc/cellgraph.hpp"
#include "voroperc/estimators.hpp"
#include "voroperc/events.hpp"
#include "voroperc/format.hpp"
#include "voroperc/geometry.hpp"
#include "voroperc/lp.hpp"
#include "voroperc/models.hpp"
#include "voroperc/ppp.hpp"
#include "voroperc/rng.hpp"
#include "voroperc/selftest.hpp"
#include "voroperc/spatial_hash.hpp"
#include "voroperc/union_find.hpp"

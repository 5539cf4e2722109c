#ifndef OTCONC_OTCONC_HPP_
#define OTCONC_OTCONC_HPP_

#include "otconc/bounds.hpp"
#include "otconc/common.hpp"
#include "otconc/cost.hpp"
#include "otconc/csv.hpp"
#include "otconc/distribution.hpp"
#include "otconc/harness.hpp"
#include "otconc/measure.hpp"
#include "otconc/ot.hpp"
#include "otconc/partition.hpp"
#include "otconc/rate.hpp"
#include "otconc/rng.hpp"
#include "otconc/svg.hpp"

#endif  // OTCONC_OTCONC_HPP_

// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_RANGEKIT_HPP
#define RANGEKIT_RANGEKIT_HPP

#include "rangekit/augment.hpp"
#include "rangekit/core.hpp"
#include "rangekit/io.hpp"
#include "rangekit/metrics.hpp"
#include "rangekit/net.hpp"
#include "rangekit/occupancy.hpp"
#include "rangekit/postprocess.hpp"
#include "rangekit/random.hpp"
#include "rangekit/rasterize.hpp"
#include "rangekit/render.hpp"
#include "rangekit/str.hpp"

#endif  // RANGEKIT_RANGEKIT_HPP

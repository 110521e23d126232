// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "l2d/astro.hpp"
#include "l2d/errors.hpp"
#include "l2d/grid.hpp"
#include "l2d/ilp.hpp"
#include "l2d/lp.hpp"
#include "l2d/pla.hpp"
#include "l2d/report.hpp"
#include "l2d/rhs.hpp"
#include "l2d/scenario.hpp"
#include "l2d/teg.hpp"

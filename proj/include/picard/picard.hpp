#pragma once

#include "picard/accumulator.hpp"
#include "picard/bounds.hpp"
#include "picard/conditions.hpp"
#include "picard/density.hpp"
#include "picard/errors.hpp"
#include "picard/estimators.hpp"
#include "picard/expression.hpp"
#include "picard/functional.hpp"
#include "picard/grid.hpp"
#include "picard/message.hpp"
#include "picard/order.hpp"
#include "picard/parallel.hpp"
#include "picard/path_ops.hpp"
#include "picard/presets.hpp"
#include "picard/rng.hpp"
#include "picard/solver.hpp"
#include "picard/transforms.hpp"

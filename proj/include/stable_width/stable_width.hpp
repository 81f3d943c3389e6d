#pragma once

#include "activation.hpp"
#include "config.hpp"
#include "counterexample.hpp"
#include "errors.hpp"
#include "heavy_tail.hpp"
#include "io.hpp"
#include "limit_theory.hpp"
#include "mlp.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stable_dist.hpp"
#include "stats.hpp"
#include "version.hpp"

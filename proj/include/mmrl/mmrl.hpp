#pragma once

#include "mmrl/environments.hpp"
#include "mmrl/evaluation.hpp"
#include "mmrl/experiment.hpp"
#include "mmrl/io.hpp"
#include "mmrl/plackett_luce.hpp"
#include "mmrl/posterior.hpp"
#include "mmrl/query_selection.hpp"
#include "mmrl/rng.hpp"
#include "mmrl/types.hpp"

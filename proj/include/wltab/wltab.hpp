#pragma once

#include "wltab/errors.hpp"
#include "wltab/formula.hpp"
#include "wltab/graph.hpp"
#include "wltab/miner.hpp"
#include "wltab/model_check.hpp"
#include "wltab/parallel.hpp"
#include "wltab/quantifier.hpp"
#include "wltab/refinement.hpp"
#include "wltab/syntax.hpp"
#include "wltab/tabularize.hpp"
#include "wltab/tudataset.hpp"
#include "wltab/types.hpp"

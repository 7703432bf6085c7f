#pragma once

#include "acosvm/aco.hpp"
#include "acosvm/crossval.hpp"
#include "acosvm/data.hpp"
#include "acosvm/error.hpp"
#include "acosvm/experiment.hpp"
#include "acosvm/parallel.hpp"
#include "acosvm/rng.hpp"
#include "acosvm/svm.hpp"

#pragma once

#include "logitcond/error.hpp"
#include "logitcond/random.hpp"
#include "logitcond/norms.hpp"
#include "logitcond/data.hpp"
#include "logitcond/loss.hpp"
#include "logitcond/lp.hpp"
#include "logitcond/conditioning.hpp"
#include "logitcond/solvers.hpp"
#include "logitcond/parallel.hpp"
#include "logitcond/guarantees.hpp"
#include "logitcond/serialize.hpp"

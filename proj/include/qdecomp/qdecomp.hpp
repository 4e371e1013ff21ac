#pragma once

#include "qdecomp/annealer.hpp"
#include "qdecomp/benders.hpp"
#include "qdecomp/dantzig_wolfe.hpp"
#include "qdecomp/generate.hpp"
#include "qdecomp/io.hpp"
#include "qdecomp/lp_simplex.hpp"
#include "qdecomp/milp_model.hpp"
#include "qdecomp/qubo.hpp"
#include "qdecomp/relu_verifier.hpp"

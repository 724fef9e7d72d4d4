#pragma once

#include "glab/error.hpp"
#include "glab/lattice.hpp"
#include "glab/process.hpp"
#include "glab/generator.hpp"
#include "glab/payoff.hpp"
#include "glab/constraint.hpp"
#include "glab/gexp.hpp"
#include "glab/decomp.hpp"
#include "glab/crossings.hpp"
#include "glab/constrained.hpp"
#include "glab/emm.hpp"
#include "glab/report.hpp"
#include "glab/scenario.hpp"

#pragma once

// Differentially private penalized logistic regression with elastic-net
// regularization: objective-perturbation release, private regularization
// selection, and a seeded synthetic-GWAS recovery harness.

#include "dperm/builtin.hpp"
#include "dperm/dataset.hpp"
#include "dperm/errors.hpp"
#include "dperm/experiment.hpp"
#include "dperm/gwas.hpp"
#include "dperm/io.hpp"
#include "dperm/mechanism.hpp"
#include "dperm/noise.hpp"
#include "dperm/objective.hpp"
#include "dperm/rng.hpp"
#include "dperm/solver.hpp"
#include "dperm/tuning.hpp"

namespace dperm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dperm

#pragma once

#include <limits>
#include <span>

#include "cofuse/core/tape.hpp"

namespace cofuse::training {

struct LossBreakdown {
  double task = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct LossVars {
  core::Var task;
  core::Var reg;
  core::Var total;
};

// Log-variance level below which the regulariser stops pulling.
inline constexpr double kNoRegFloor = -std::numeric_limits<double>::infinity();

// task = BCE(sigmoid(logit), label) in logit form, softplus(z) - y z;
// reg = sum over present observations of mean(max(u, floor)); total = task + lambda reg.
// With the default floor the regulariser is the plain sum of means.
LossVars loss(core::Tape& tape, core::Var logit, int label, std::span<const core::Var> u_list, double lambda,
              double reg_floor = kNoRegFloor);

LossBreakdown values(const core::Tape& tape, const LossVars& vars);

}  // namespace cofuse::training

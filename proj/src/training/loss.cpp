#include "cofuse/training/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cofuse::training {

LossVars loss(core::Tape& tape, core::Var logit, int label, std::span<const core::Var> u_list, double lambda,
              double reg_floor) {
  if (label != 0 && label != 1) throw std::invalid_argument("loss: label must be 0 or 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("loss: regulariser weight must be non-negative");
  LossVars out;
  const core::Var sp = tape.softplus(logit);
  out.task = label == 1 ? tape.sub(sp, logit) : sp;
  if (u_list.empty()) {
    out.reg = tape.constant(0.0);
  } else {
    std::vector<core::Var> means;
    means.reserve(u_list.size());
    for (auto u : u_list) {
      const core::Var floored =
          std::isfinite(reg_floor) ? tape.add_scalar(tape.relu(tape.add_scalar(u, -reg_floor)), reg_floor) : u;
      means.push_back(tape.mean_all(floored));
    }
    out.reg = tape.sum(means);
  }
  out.total = tape.add(out.task, tape.scalar_mul(out.reg, lambda));
  return out;
}

LossBreakdown values(const core::Tape& tape, const LossVars& vars) {
  return {tape.item(vars.task), tape.item(vars.reg), tape.item(vars.total)};
}

}  // namespace cofuse::training

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grl/parameters.h"
#include "grl/tape.h"

namespace grl {

// Builds a scalar loss on the given tape from parameters bound through
// Tape::parameter. Must be deterministic for fixed parameter values.
using LossBuilder = std::function<ad::Var(ad::Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Compares reverse-mode gradients against central differences
// (f(θ+ε) - f(θ-ε)) / 2ε for every entry of every parameter in `params`.
// The relative error of an entry is |a - n| / max(1, |a|, |n|).
GradCheckResult finite_diff_check(const LossBuilder& loss,
                                  std::vector<Parameter*> params,
                                  double eps = 1e-5);

struct OpCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t instances = 0;
};

// Finite-difference check of every differentiable primitive on `instances`
// random small inputs each.
std::vector<OpCheck> check_all_ops(std::uint64_t seed, std::size_t instances = 20,
                                   double eps = 1e-5);

}  // namespace grl

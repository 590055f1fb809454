#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "grl/array.h"
#include "grl/parameters.h"

namespace grl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates keyed by parameter name.
struct AdamState {
  AdamConfig config;
  std::map<std::string, Array> m;
  std::map<std::string, Array> v;
  std::size_t step = 0;
};

// One bias-corrected Adam update of every parameter from its grad:
//   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2
//   θ -= lr · m̂ / (sqrt(v̂) + ε),  m̂ = m / (1-b1^t),  v̂ = v / (1-b2^t)
// Throws std::domain_error naming the parameter if a gradient is not finite;
// in that case no parameter is modified.
void adam_step(ParameterSet& params, AdamState& state, double lr);

}  // namespace grl

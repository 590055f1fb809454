#include "grl/adam.h"

#include <cmath>
#include <stdexcept>

namespace grl {

void adam_step(ParameterSet& params, AdamState& state, double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  for (const Parameter& p : params) {
    if (p.grad.shape() != p.value.shape()) {
      throw std::invalid_argument("gradient shape mismatch for '" + p.name + "'");
    }
    for (double g : p.grad.values()) {
      if (!std::isfinite(g)) {
        throw std::domain_error("non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (Parameter& p : params) {
    Array& m = state.m.try_emplace(p.name, p.value.shape()).first->second;
    Array& v = state.v.try_emplace(p.name, p.value.shape()).first->second;
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape()) {
      throw std::invalid_argument("optimizer state shape mismatch for '" +
                                  p.name + "'");
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace grl

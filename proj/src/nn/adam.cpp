#include "lattice/nn/adam.hpp"

#include <cmath>

#include "lattice/error.hpp"

namespace lattice::nn {

Adam::Adam(AdamConfig config, const std::vector<ParamBlock>& blocks) : config_(config) {
  if (config_.steps_per_epoch <= 0) config_.steps_per_epoch = 1;
  state_.m.reserve(blocks.size());
  state_.v.reserve(blocks.size());
  for (const auto& b : blocks) {
    state_.m.emplace_back(b.size, 0.0);
    state_.v.emplace_back(b.size, 0.0);
  }
}

double Adam::current_lr() const {
  const long epoch = state_.t / config_.steps_per_epoch;
  return config_.lr0 / (1.0 + config_.decay * static_cast<double>(epoch));
}

void Adam::step(const std::vector<ParamBlock>& blocks) {
  if (blocks.size() != state_.m.size()) {
    throw ContractViolation("Adam::step: parameter layout changed");
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].size != state_.m[k].size()) {
      throw ContractViolation("Adam::step: block '" + blocks[k].name + "' changed size");
    }
    for (std::size_t i = 0; i < blocks[k].size; ++i) {
      if (!std::isfinite(blocks[k].grad[i])) {
        throw NumericalError("Adam::step: non-finite gradient in '" + blocks[k].name + "'[" +
                             std::to_string(i) + "]");
      }
    }
  }

  const double lr = current_lr();
  ++state_.t;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state_.t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state_.t));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    double* p = blocks[k].value;
    const double* g = blocks[k].grad;
    double* m = state_.m[k].data();
    double* v = state_.v[k].data();
    for (std::size_t i = 0; i < blocks[k].size; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace lattice::nn

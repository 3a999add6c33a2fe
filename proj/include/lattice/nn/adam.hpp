#pragma once

#include <vector>

#include "lattice/nn/tensor.hpp"

namespace lattice::nn {

struct AdamConfig {
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Inverse time decay per epoch: lr = lr0 / (1 + decay * epoch).
  double decay = 0.1;
  long steps_per_epoch = 1;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long t = 0;
};

/// Bias-corrected Adam over a fixed list of parameter blocks.
class Adam {
 public:
  Adam(AdamConfig config, const std::vector<ParamBlock>& blocks);

  /// Learning rate the next step() will use.
  double current_lr() const;

  /// Applies one update from the gradients stored in `blocks`. Throws
  /// NumericalError, leaving parameters and state untouched, if any gradient
  /// is non-finite.
  void step(const std::vector<ParamBlock>& blocks);

  const AdamState& state() const { return state_; }
  const AdamConfig& config() const { return config_; }
  void set_steps_per_epoch(long steps) { config_.steps_per_epoch = steps > 0 ? steps : 1; }

 private:
  AdamConfig config_;
  AdamState state_;
};

}  // namespace lattice::nn

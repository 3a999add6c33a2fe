#pragma once

#include "lattice/nn/tensor.hpp"

namespace lattice::nn {

struct LossResult {
  double value = 0.0;
  Matrix grad;  // dL/dpred
};

/// Mean absolute error over all entries; subgradient 0 at exact ties.
LossResult mae_loss(const Matrix& pred, const Matrix& target);
/// Mean squared error over all entries.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

double mae_value(const Matrix& pred, const Matrix& target);
double mse_value(const Matrix& pred, const Matrix& target);

}  // namespace lattice::nn

#include "lattice/nn/loss.hpp"

#include "lattice/error.hpp"

namespace lattice::nn {
namespace {

void check_shapes(const Matrix& pred, const Matrix& target, const char* who) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0) {
    throw ContractViolation(std::string(who) + ": prediction and target shapes differ or are empty");
  }
}

}  // namespace

LossResult mae_loss(const Matrix& pred, const Matrix& target) {
  check_shapes(pred, target, "mae_loss");
  const double n = static_cast<double>(pred.size());
  const auto diff = (pred - target).array();
  LossResult out;
  out.value = diff.abs().sum() / n;
  out.grad = (diff.sign() / n).matrix();
  return out;
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  check_shapes(pred, target, "mse_loss");
  const double n = static_cast<double>(pred.size());
  const Matrix diff = pred - target;
  LossResult out;
  out.value = diff.squaredNorm() / n;
  out.grad = (2.0 / n) * diff;
  return out;
}

double mae_value(const Matrix& pred, const Matrix& target) {
  check_shapes(pred, target, "mae_value");
  return (pred - target).array().abs().sum() / static_cast<double>(pred.size());
}

double mse_value(const Matrix& pred, const Matrix& target) {
  check_shapes(pred, target, "mse_value");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace lattice::nn

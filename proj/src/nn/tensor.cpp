#include "lattice/nn/tensor.hpp"

#include <cmath>

#include "lattice/error.hpp"

namespace lattice::nn {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw FormatError("unknown activation '" + name + "'");
}

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z.array().max(0.0).matrix();
    case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

Matrix activation_derivative(Activation a, const Matrix& z, const Matrix& y) {
  switch (a) {
    case Activation::Identity: return Matrix::Ones(z.rows(), z.cols());
    case Activation::ReLU: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Sigmoid: return (y.array() * (1.0 - y.array())).matrix();
    case Activation::Tanh: return (1.0 - y.array().square()).matrix();
  }
  return Matrix::Ones(z.rows(), z.cols());
}

void glorot_uniform(Matrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
}

void orthogonal_blocks(Matrix& w, int block_rows, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  const Eigen::Index cols = w.cols();
  for (Eigen::Index r0 = 0; r0 < w.rows(); r0 += block_rows) {
    Eigen::MatrixXd g(block_rows, cols);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = dist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(block_rows, cols);
    // Sign fix so the draw is uniform over orthogonal matrices.
    const Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(block_rows, cols); ++k) {
      if (rmat(k, k) < 0.0) q.col(k) *= -1.0;
    }
    w.block(r0, 0, block_rows, cols) = q;
  }
}

}  // namespace lattice::nn

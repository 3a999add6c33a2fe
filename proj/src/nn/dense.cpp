#include "lattice/nn/dense.hpp"

#include "lattice/error.hpp"

namespace lattice::nn {

DenseLayer::DenseLayer(int in_dim, int out_dim, Activation act)
    : weight(Matrix::Zero(out_dim, in_dim)),
      bias(Vector::Zero(out_dim)),
      activation(act),
      grad_weight(Matrix::Zero(out_dim, in_dim)),
      grad_bias(Vector::Zero(out_dim)) {
  if (in_dim <= 0 || out_dim <= 0) throw ContractViolation("DenseLayer: dimensions must be > 0");
}

void DenseLayer::init(Rng& rng) {
  glorot_uniform(weight, rng);
  bias.setZero();
}

Matrix DenseLayer::forward(const Matrix& x, DenseCache* cache) const {
  if (x.cols() != weight.cols()) {
    throw ContractViolation("DenseLayer::forward: input has " + std::to_string(x.cols()) +
                            " columns, layer expects " + std::to_string(weight.cols()));
  }
  Matrix pre = x * weight.transpose();
  pre.rowwise() += bias.transpose();
  Matrix out = activate(activation, pre);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->out = out;
  }
  return out;
}

Matrix DenseLayer::backward(const DenseCache& cache, const Matrix& d_out) {
  if (d_out.rows() != cache.out.rows() || d_out.cols() != cache.out.cols()) {
    throw ContractViolation("DenseLayer::backward: gradient shape does not match cached output");
  }
  Matrix d_pre;
  if (activation == Activation::Identity) {
    d_pre = d_out;
  } else {
    d_pre = (d_out.array() * activation_derivative(activation, cache.pre, cache.out).array()).matrix();
  }
  grad_weight.noalias() += d_pre.transpose() * cache.input;
  grad_bias += d_pre.colwise().sum().transpose();
  return d_pre * weight;
}

void DenseLayer::zero_grad() {
  grad_weight.setZero();
  grad_bias.setZero();
}

std::vector<ParamBlock> DenseLayer::params(const std::string& prefix) {
  return {
      {prefix + ".W", weight.data(), grad_weight.data(), static_cast<std::size_t>(weight.size())},
      {prefix + ".b", bias.data(), grad_bias.data(), static_cast<std::size_t>(bias.size())},
  };
}

}  // namespace lattice::nn

#pragma once

#include <vector>

#include "lattice/nn/tensor.hpp"

namespace lattice::nn {

struct DenseCache {
  Matrix input;
  Matrix pre;  // x W^T + b
  Matrix out;
};

/// y = act(x W^T + b) applied row-wise to a batch.
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(int in_dim, int out_dim, Activation act);

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
  std::size_t param_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }

  void init(Rng& rng);

  /// `cache` may be null for inference.
  Matrix forward(const Matrix& x, DenseCache* cache = nullptr) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const DenseCache& cache, const Matrix& d_out);

  void zero_grad();
  std::vector<ParamBlock> params(const std::string& prefix);

  Matrix weight;  // out x in
  Vector bias;
  Activation activation = Activation::Identity;
  Matrix grad_weight;
  Vector grad_bias;
};

}  // namespace lattice::nn

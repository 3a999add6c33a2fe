#pragma once

#include <vector>

#include "lattice/nn/tensor.hpp"

namespace lattice::nn {

/// Activations saved by GruLayer::forward for backpropagation through time.
/// Every matrix is time-major: rows [t*B, (t+1)*B) belong to step t.
struct GruCache {
  int steps = 0;
  int batch = 0;
  Matrix input;       // TB x m
  Matrix hidden;      // TB x n, h_t
  Matrix update;      // z_t
  Matrix reset;       // r_t
  Matrix candidate;   // h~_t
  Matrix recurrent;   // U_h h_{t-1} + b_hh
};

/// Reset-after GRU with separate input and recurrent biases:
///   z  = sigmoid(W_z x + b_xz + U_z h + b_hz)
///   r  = sigmoid(W_r x + b_xr + U_r h + b_hr)
///   h~ = tanh(W_h x + b_xh + r * (U_h h + b_hh))
///   h' = z * h + (1 - z) * h~
/// Gate blocks are stacked [z; r; h] along the rows of `input_weight` and
/// `recurrent_weight`. The initial state is zero.
class GruLayer {
 public:
  GruLayer() = default;
  GruLayer(int input_dim, int hidden_dim);

  int input_dim() const { return static_cast<int>(input_weight.cols()); }
  int hidden_dim() const { return static_cast<int>(recurrent_weight.cols()); }

  /// 3n(m + n) + 6n.
  static std::size_t param_count(int input_dim, int hidden_dim);
  std::size_t param_count() const { return param_count(input_dim(), hidden_dim()); }

  void init(Rng& rng);

  /// x is (steps*batch) x m in time-major order; returns the hidden states
  /// in the same layout.
  Matrix forward(const Matrix& x, int steps, int batch, GruCache* cache = nullptr) const;

  /// One step for a single sample: returns h_t.
  Vector step(const Vector& x, const Vector& h_prev) const;

  /// Accumulates parameter gradients from dL/dh_t for every step and
  /// returns dL/dx in the input layout.
  Matrix backward(const GruCache& cache, const Matrix& d_hidden);

  void zero_grad();
  std::vector<ParamBlock> params(const std::string& prefix);

  Matrix input_weight;      // 3n x m: W_z, W_r, W_h
  Matrix recurrent_weight;  // 3n x n: U_z, U_r, U_h
  Vector input_bias;        // 3n: b_xz, b_xr, b_xh
  Vector recurrent_bias;    // 3n: b_hz, b_hr, b_hh

  Matrix grad_input_weight;
  Matrix grad_recurrent_weight;
  Vector grad_input_bias;
  Vector grad_recurrent_bias;
};

}  // namespace lattice::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lattice::nn {

// Row-major so that a (T*B) x C sequence batch keeps each time step's rows
// contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1, Sigmoid = 2, Tanh = 3 };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Applies `a` element-wise to `z`.
Matrix activate(Activation a, const Matrix& z);
/// d act / d z expressed through the activation output `y` (and `z` for ReLU).
Matrix activation_derivative(Activation a, const Matrix& z, const Matrix& y);

/// Non-owning view of one parameter tensor and its gradient buffer.
struct ParamBlock {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

using Rng = std::mt19937_64;

/// Glorot-uniform fill for a fan_out x fan_in weight matrix.
void glorot_uniform(Matrix& w, Rng& rng);
/// Orthogonal columns per n x n block (blocks stacked vertically).
void orthogonal_blocks(Matrix& w, int block_rows, Rng& rng);

}  // namespace lattice::nn

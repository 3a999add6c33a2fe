#pragma once

#include <vector>

#include "lattice/nn/dense.hpp"
#include "lattice/nn/gru.hpp"
#include "lattice/nn/weights.hpp"

namespace lattice::nn {

struct SequenceModelSpec {
  int input_dim = 106;
  std::vector<int> hidden = {300, 300, 300};
  int output_dim = 4;
};

struct ParamCount {
  std::size_t recurrent = 0;  // GRU stack only
  std::size_t head = 0;       // shared per-step output layer
  std::size_t total() const { return recurrent + head; }
};

ParamCount count_params(const SequenceModelSpec& spec);
std::size_t dense_param_count(int in_dim, int out_dim);

/// Stacked GRU layers followed by a per-step identity dense head.
class SequenceModel {
 public:
  struct Cache {
    int steps = 0;
    int batch = 0;
    std::vector<GruCache> layers;
    DenseCache head;
  };

  SequenceModel() = default;
  explicit SequenceModel(SequenceModelSpec spec);

  const SequenceModelSpec& spec() const { return spec_; }
  void init(Rng& rng);

  /// x: (steps*batch) x input_dim, time-major. Returns (steps*batch) x output_dim.
  Matrix forward(const Matrix& x, int steps, int batch, Cache* cache = nullptr) const;
  /// Accumulates gradients; returns dL/dx.
  Matrix backward(const Cache& cache, const Matrix& d_out);

  void zero_grad();
  std::vector<ParamBlock> params();
  std::size_t param_count() const;

  void to_archive(WeightArchive& archive) const;
  static SequenceModel from_archive(const WeightArchive& archive);

  std::vector<GruLayer> layers;
  DenseLayer head;

 private:
  SequenceModelSpec spec_;
};

/// Dense image autoencoder: pixels -> latent(ReLU) -> latent(ReLU) -> pixels(sigmoid).
class Autoencoder {
 public:
  struct Cache {
    DenseCache enc1, enc2, dec;
  };

  Autoencoder() = default;
  Autoencoder(int pixels, int latent);

  int pixels() const { return encoder1.in_dim(); }
  int latent_dim() const { return encoder2.out_dim(); }

  void init(Rng& rng);
  Matrix encode(const Matrix& x) const;
  Matrix decode(const Matrix& z) const;
  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& d_out);

  void zero_grad();
  std::vector<ParamBlock> params();
  std::size_t param_count() const;

  void to_archive(WeightArchive& archive) const;
  static Autoencoder from_archive(const WeightArchive& archive);

  DenseLayer encoder1;
  DenseLayer encoder2;
  DenseLayer decoder;
};

/// Copies every block's value into the archive under the block name.
void archive_params(WeightArchive& archive, const std::vector<ParamBlock>& blocks);
/// Restores block values from the archive; sizes must match.
void restore_params(const WeightArchive& archive, const std::vector<ParamBlock>& blocks);

}  // namespace lattice::nn

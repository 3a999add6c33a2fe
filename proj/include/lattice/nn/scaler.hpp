#pragma once

#include "lattice/nn/tensor.hpp"

namespace lattice::nn {

/// Per-channel standardization. Zero-variance channels get std = 1.
struct ScalerParams {
  Vector mean;
  Vector std;

  int channels() const { return static_cast<int>(mean.size()); }
  void apply(Matrix& rows) const;
  void invert(Matrix& rows) const;
};

/// Population moments (ddof = 0) of each column. Throws on empty input.
ScalerParams scaler_fit(const Matrix& rows);

/// Streaming variant of scaler_fit (Welford updates per row).
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int channels);
  void add_row(const double* row);
  void add_rows(const Matrix& rows);
  long count() const { return count_; }
  ScalerParams finish() const;

 private:
  long count_ = 0;
  Vector mean_;
  Vector m2_;
};

}  // namespace lattice::nn

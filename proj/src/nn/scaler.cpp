#include "lattice/nn/scaler.hpp"

#include <cmath>

#include "lattice/error.hpp"

namespace lattice::nn {

void ScalerParams::apply(Matrix& rows) const {
  if (rows.cols() != mean.size()) throw ContractViolation("ScalerParams::apply: channel mismatch");
  rows.rowwise() -= mean.transpose();
  rows.array().rowwise() /= std.transpose().array();
}

void ScalerParams::invert(Matrix& rows) const {
  if (rows.cols() != mean.size()) throw ContractViolation("ScalerParams::invert: channel mismatch");
  rows.array().rowwise() *= std.transpose().array();
  rows.rowwise() += mean.transpose();
}

ScalerParams scaler_fit(const Matrix& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) throw ContractViolation("scaler_fit: empty input");
  ScalerParams p;
  const double n = static_cast<double>(rows.rows());
  p.mean = rows.colwise().sum().transpose() / n;
  p.std.resize(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - p.mean(c)).square().sum() / n;
    p.std(c) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return p;
}

MomentAccumulator::MomentAccumulator(int channels)
    : mean_(Vector::Zero(channels)), m2_(Vector::Zero(channels)) {}

void MomentAccumulator::add_row(const double* row) {
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (Eigen::Index c = 0; c < mean_.size(); ++c) {
    const double delta = row[c] - mean_(c);
    mean_(c) += delta * inv;
    m2_(c) += delta * (row[c] - mean_(c));
  }
}

void MomentAccumulator::add_rows(const Matrix& rows) {
  if (rows.cols() != mean_.size()) throw ContractViolation("MomentAccumulator: channel mismatch");
  for (Eigen::Index r = 0; r < rows.rows(); ++r) add_row(rows.row(r).data());
}

ScalerParams MomentAccumulator::finish() const {
  if (count_ == 0) throw ContractViolation("MomentAccumulator::finish: no rows added");
  ScalerParams p;
  p.mean = mean_;
  p.std.resize(mean_.size());
  for (Eigen::Index c = 0; c < mean_.size(); ++c) {
    const double var = m2_(c) / static_cast<double>(count_);
    p.std(c) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return p;
}

}  // namespace lattice::nn

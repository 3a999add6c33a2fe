#include "lattice/pipeline/gru_training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "lattice/error.hpp"
#include "lattice/nn/adam.hpp"
#include "lattice/nn/loss.hpp"

namespace lattice::pipeline {

using nn::Matrix;

namespace {

constexpr std::size_t kEvalChunk = 512;

void check_points(const Dataset& data, const std::vector<std::size_t>& points, const char* what) {
  for (auto i : points) {
    if (i >= data.size()) throw ContractViolation(std::string(what) + ": point index out of range");
  }
}

}  // namespace

std::pair<nn::ScalerParams, nn::ScalerParams> fit_scalers(const Dataset& data,
                                                          const std::vector<std::size_t>& points) {
  if (points.empty()) throw ContractViolation("fit_scalers: empty training partition");
  nn::MomentAccumulator xs(kFeatureCols), ys(kTargetCols);
  for (auto i : points) {
    const TrainingPoint p = data.point(i);
    xs.add_rows(p.features);
    ys.add_rows(p.targets);
  }
  return {xs.finish(), ys.finish()};
}

void assemble_batch(const Dataset& data, std::span<const std::size_t> points, const Regressor& reg,
                    Matrix& x, Matrix& y) {
  const auto batch = static_cast<Eigen::Index>(points.size());
  x.resize(kOutputSteps * batch, kFeatureCols);
  y.resize(kOutputSteps * batch, kTargetCols);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const TrainingPoint p = data.point(points[static_cast<std::size_t>(b)]);
    for (int t = 0; t < kOutputSteps; ++t) {
      x.row(t * batch + b) = p.features.row(t);
      y.row(t * batch + b) = p.targets.row(t);
    }
  }
  reg.x_scaler.apply(x);
  reg.y_scaler.apply(y);
}

std::pair<double, double> scaled_errors(const Regressor& reg, const Dataset& data,
                                        const std::vector<std::size_t>& points) {
  if (points.empty()) {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  double abs_sum = 0.0, sq_sum = 0.0;
  Matrix x, y;
  for (std::size_t a = 0; a < points.size(); a += kEvalChunk) {
    const std::span<const std::size_t> chunk(points.data() + a,
                                             std::min(kEvalChunk, points.size() - a));
    assemble_batch(data, chunk, reg, x, y);
    const Matrix pred = reg.model.forward(x, kOutputSteps, static_cast<int>(chunk.size()));
    abs_sum += (pred - y).cwiseAbs().sum();
    sq_sum += (pred - y).squaredNorm();
  }
  const double n = static_cast<double>(points.size()) * kOutputSteps * kTargetCols;
  return {abs_sum / n, sq_sum / n};
}

void continue_training(Regressor& reg, const Dataset& data, const std::vector<std::size_t>& train,
                       const std::vector<std::size_t>& val, const GruTrainConfig& cfg,
                       std::vector<EpochTrace>& trace) {
  if (cfg.epochs < 0 || cfg.batch < 1) throw ContractViolation("train gru: bad epochs or batch size");
  if (cfg.epochs > 0 && train.empty()) throw ContractViolation("train gru: empty training partition");
  check_points(data, train, "train gru");
  check_points(data, val, "train gru");

  auto params = reg.model.params();
  const auto steps = static_cast<long>((train.size() + cfg.batch - 1) / cfg.batch);
  nn::Adam adam({cfg.lr0, 0.9, 0.999, 1e-8, cfg.decay, steps}, params);
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0x6e0u};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order = train;
  Matrix x, y;

  for (int e = 1; e <= cfg.epochs; ++e) {
    const int epoch = static_cast<int>(trace.size()) + 1;
    std::shuffle(order.begin(), order.end(), rng);
    double mae_sum = 0.0, mse_sum = 0.0;
    for (std::size_t a = 0; a < order.size(); a += cfg.batch) {
      const std::span<const std::size_t> chunk(order.data() + a,
                                               std::min<std::size_t>(cfg.batch, order.size() - a));
      const auto batch_no = a / cfg.batch;
      assemble_batch(data, chunk, reg, x, y);
      nn::SequenceModel::Cache cache;
      const Matrix pred = reg.model.forward(x, kOutputSteps, static_cast<int>(chunk.size()), &cache);
      const auto loss = nn::mae_loss(pred, y);
      if (!std::isfinite(loss.value)) {
        throw NumericalError("train gru: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_no));
      }
      reg.model.zero_grad();
      reg.model.backward(cache, loss.grad);
      try {
        adam.step(params);
      } catch (const NumericalError& err) {
        throw NumericalError(std::string(err.what()) + " (epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_no) + ")");
      }
      const auto w = static_cast<double>(chunk.size());
      mae_sum += loss.value * w;
      mse_sum += nn::mse_value(pred, y) * w;
    }
    EpochTrace row;
    row.epoch = epoch;
    row.train_loss = mae_sum / static_cast<double>(order.size());
    row.train_mse = mse_sum / static_cast<double>(order.size());
    std::tie(row.val_loss, row.val_mse) = scaled_errors(reg, data, val);
    trace.push_back(row);
    if (cfg.on_epoch) cfg.on_epoch(row);
  }
}

GruResult train_gru(const Dataset& data, const std::vector<std::size_t>& train,
                    const std::vector<std::size_t>& val, const GruTrainConfig& cfg) {
  check_points(data, train, "train gru");
  GruResult result;
  auto& reg = result.regressor;
  std::tie(reg.x_scaler, reg.y_scaler) = fit_scalers(data, train);
  reg.model = nn::SequenceModel({kFeatureCols, cfg.hidden, kTargetCols});
  nn::Rng init_rng(cfg.seed ^ 0x94c0ULL);
  reg.model.init(init_rng);
  continue_training(reg, data, train, val, cfg, result.trace);
  return result;
}

Matrix predict(const Regressor& reg, const Matrix& features) {
  if (reg.layout_version != kFeatureLayoutVersion) {
    throw FormatError("model expects feature layout " + std::to_string(reg.layout_version) +
                      ", this build produces layout " + std::to_string(kFeatureLayoutVersion));
  }
  if (features.rows() != kOutputSteps || features.cols() != kFeatureCols) {
    throw ContractViolation("predict: features must be 50 x 106");
  }
  Matrix x = features;
  reg.x_scaler.apply(x);
  Matrix y = reg.model.forward(x, kOutputSteps, 1);
  reg.y_scaler.invert(y);
  return y;
}

std::vector<Matrix> predict_points(const Regressor& reg, const Dataset& data,
                                   const std::vector<std::size_t>& points) {
  if (reg.layout_version != data.layout_version) {
    throw FormatError("model and dataset feature layouts differ");
  }
  check_points(data, points, "predict");
  std::vector<Matrix> out;
  out.reserve(points.size());
  Matrix x, y;
  for (std::size_t a = 0; a < points.size(); a += kEvalChunk) {
    const std::span<const std::size_t> chunk(points.data() + a,
                                             std::min(kEvalChunk, points.size() - a));
    assemble_batch(data, chunk, reg, x, y);
    const auto batch = static_cast<Eigen::Index>(chunk.size());
    Matrix pred = reg.model.forward(x, kOutputSteps, static_cast<int>(batch));
    reg.y_scaler.invert(pred);
    for (Eigen::Index b = 0; b < batch; ++b) {
      Matrix p(kOutputSteps, kTargetCols);
      for (int t = 0; t < kOutputSteps; ++t) p.row(t) = pred.row(t * batch + b);
      out.push_back(std::move(p));
    }
  }
  return out;
}

nn::WeightArchive regressor_archive(const Regressor& reg) {
  nn::WeightArchive archive;
  reg.model.to_archive(archive);
  archive.set_meta("feature_layout", std::to_string(reg.layout_version));
  auto put = [&](const std::string& name, const nn::Vector& v) {
    archive.add_blob(name, v.data(), static_cast<std::size_t>(v.size()));
  };
  put("x_scaler.mean", reg.x_scaler.mean);
  put("x_scaler.std", reg.x_scaler.std);
  put("y_scaler.mean", reg.y_scaler.mean);
  put("y_scaler.std", reg.y_scaler.std);
  return archive;
}

Regressor regressor_from_archive(const nn::WeightArchive& archive) {
  Regressor reg;
  try {
    reg.layout_version = static_cast<std::uint32_t>(std::stoul(archive.meta("feature_layout")));
  } catch (const std::invalid_argument&) {
    throw FormatError("weight file has a malformed feature_layout entry");
  }
  if (reg.layout_version != kFeatureLayoutVersion) {
    throw FormatError("weight file was trained on feature layout " +
                      std::to_string(reg.layout_version) + ", this build uses " +
                      std::to_string(kFeatureLayoutVersion));
  }
  reg.model = nn::SequenceModel::from_archive(archive);
  auto get = [&](const std::string& name, std::size_t n) {
    const auto& v = archive.blob(name, n);
    return nn::Vector(Eigen::Map<const nn::Vector>(v.data(), static_cast<Eigen::Index>(n)));
  };
  const auto nx = static_cast<std::size_t>(reg.model.spec().input_dim);
  const auto ny = static_cast<std::size_t>(reg.model.spec().output_dim);
  reg.x_scaler = {get("x_scaler.mean", nx), get("x_scaler.std", nx)};
  reg.y_scaler = {get("y_scaler.mean", ny), get("y_scaler.std", ny)};
  return reg;
}

void write_trace_csv(std::ostream& out, const std::vector<EpochTrace>& trace) {
  out << "epoch,train_loss,val_loss,train_mse,val_mse\n";
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss,
                  r.val_loss, r.train_mse, r.val_mse);
    out << buf;
  }
}

}  // namespace lattice::pipeline

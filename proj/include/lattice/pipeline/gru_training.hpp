#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "lattice/nn/models.hpp"
#include "lattice/nn/scaler.hpp"
#include "lattice/pipeline/dataset.hpp"

namespace lattice::pipeline {

struct EpochTrace {
  int epoch = 0;
  double train_loss = 0.0;  // scaled MAE, running mean over the epoch
  double val_loss = 0.0;    // scaled MAE after the epoch
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct GruTrainConfig {
  std::vector<int> hidden = {300, 300, 300};
  int epochs = 150;
  int batch = 600;
  double lr0 = 1e-3;
  double decay = 0.1;
  std::uint64_t seed = 0;
  // Called after every epoch, e.g. for progress logging.
  std::function<void(const EpochTrace&)> on_epoch;
};

/// Trained sequence model together with the scalers fitted on its
/// training partition.
struct Regressor {
  nn::SequenceModel model;
  nn::ScalerParams x_scaler;
  nn::ScalerParams y_scaler;
  std::uint32_t layout_version = kFeatureLayoutVersion;
};

struct GruResult {
  Regressor regressor;
  std::vector<EpochTrace> trace;
};

/// Feature and target moments over the given points only.
std::pair<nn::ScalerParams, nn::ScalerParams> fit_scalers(const Dataset& data,
                                                          const std::vector<std::size_t>& points);

/// Scaled, time-major batch: row t*B + b holds step t of points[b].
void assemble_batch(const Dataset& data, std::span<const std::size_t> points,
                    const Regressor& reg, nn::Matrix& x, nn::Matrix& y);

/// Fits scalers on `train`, initializes and trains a fresh model.
/// Throws NumericalError naming the epoch and batch on a non-finite loss.
GruResult train_gru(const Dataset& data, const std::vector<std::size_t>& train,
                    const std::vector<std::size_t>& val, const GruTrainConfig& config);

/// Further epochs with a fresh optimizer; scalers stay as they are.
/// `config.hidden` is ignored. Trace rows are appended.
void continue_training(Regressor& reg, const Dataset& data, const std::vector<std::size_t>& train,
                       const std::vector<std::size_t>& val, const GruTrainConfig& config,
                       std::vector<EpochTrace>& trace);

/// Scaled MAE and MSE of the model over `points`.
std::pair<double, double> scaled_errors(const Regressor& reg, const Dataset& data,
                                        const std::vector<std::size_t>& points);

/// Physical-unit prediction for one 50 x 106 feature matrix; no clamping.
/// Throws FormatError when the regressor was built for another layout.
nn::Matrix predict(const Regressor& reg, const nn::Matrix& features);

/// Batched predict() over dataset points.
std::vector<nn::Matrix> predict_points(const Regressor& reg, const Dataset& data,
                                       const std::vector<std::size_t>& points);

nn::WeightArchive regressor_archive(const Regressor& reg);
Regressor regressor_from_archive(const nn::WeightArchive& archive);

void write_trace_csv(std::ostream& out, const std::vector<EpochTrace>& trace);

}  // namespace lattice::pipeline

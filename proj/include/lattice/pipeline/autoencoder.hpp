#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lattice/nn/models.hpp"
#include "lattice/raster.hpp"

namespace lattice::pipeline {

struct AeEpoch {
  int epoch = 0;
  double train_mse = 0.0;  // running mean over the epoch's batches
  double test_mse = 0.0;   // seen-design test split after the epoch
};

struct AeConfig {
  int latent_dim = 100;
  int epochs = 80;
  int batch = 50;
  double lr0 = 1e-3;
  double decay = 0.0;
  double train_frac = 0.8;  // of the seen designs
  // Initial bias of the two ReLU layers; a small positive value keeps units
  // from dying in the first Adam steps.
  double relu_bias = 0.0;
  // Start the sigmoid output at the mean training pixel instead of 0.5.
  bool output_bias_from_mean = true;
  std::uint64_t seed = 0;
  std::function<void(const AeEpoch&)> on_epoch;
};

struct AeReport {
  std::vector<std::string> train_keys, test_keys, unseen_keys;
  double dsc_untrained_test = 0.0;
  double dsc_train = 0.0;
  double dsc_test = 0.0;
  double dsc_unseen = 0.0;
  std::vector<AeEpoch> trace;
};

struct AeResult {
  nn::Autoencoder model;
  AeReport report;
};

/// Images flattened to 0/1 pixels, one row each.
nn::Matrix image_matrix(const std::vector<const BitImage*>& images);

/// Reconstruction binarized at 0.5.
BitImage reconstruct(const nn::Autoencoder& model, const BitImage& image);

/// Mean DSC between each image and its binarized reconstruction.
double mean_dsc(const nn::Autoencoder& model, const std::vector<const BitImage*>& images);

/// Images whose source_key is in `unseen` are never trained on; the rest
/// are split train/test by `train_frac`. Throws ContractViolation if the
/// training split is smaller than the batch size.
AeResult train_autoencoder(const std::vector<BitImage>& images,
                           const std::vector<std::string>& unseen, const AeConfig& config);

/// Latent vector of every image keyed by source_key.
std::map<std::string, std::vector<double>> encode_images(const nn::Autoencoder& model,
                                                          const std::vector<BitImage>& images);

void write_ae_trace_csv(std::ostream& out, const std::vector<AeEpoch>& trace);

/// Weight archive with the unseen key list stored as metadata.
nn::WeightArchive ae_archive(const AeResult& result);
std::vector<std::string> archive_key_list(const nn::WeightArchive& archive, const std::string& field);

}  // namespace lattice::pipeline

#include "lattice/pipeline/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "lattice/error.hpp"
#include "lattice/nn/adam.hpp"
#include "lattice/nn/loss.hpp"

namespace lattice::pipeline {

using nn::Matrix;

Matrix image_matrix(const std::vector<const BitImage*>& images) {
  Matrix x(static_cast<Eigen::Index>(images.size()), kImagePixels);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto bits = images[i]->bits();
    for (int p = 0; p < kImagePixels; ++p) x(static_cast<Eigen::Index>(i), p) = bits[p];
  }
  return x;
}

BitImage reconstruct(const nn::Autoencoder& model, const BitImage& image) {
  const Matrix y = model.forward(image_matrix({&image}));
  BitImage out = BitImage::from_floats(std::span<const double>(y.data(), kImagePixels));
  out.source_key = image.source_key;
  return out;
}

double mean_dsc(const nn::Autoencoder& model, const std::vector<const BitImage*>& images) {
  if (images.empty()) return 0.0;
  double sum = 0.0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t a = 0; a < images.size(); a += kChunk) {
    const std::vector<const BitImage*> chunk(images.begin() + a,
                                             images.begin() + std::min(images.size(), a + kChunk));
    const Matrix y = model.forward(image_matrix(chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const BitImage rec = BitImage::from_floats(
          std::span<const double>(y.row(static_cast<Eigen::Index>(i)).data(), kImagePixels));
      sum += dsc(*chunk[i], rec);
    }
  }
  return sum / static_cast<double>(images.size());
}

AeResult train_autoencoder(const std::vector<BitImage>& images,
                           const std::vector<std::string>& unseen, const AeConfig& cfg) {
  if (cfg.epochs < 0 || cfg.batch < 1) throw ContractViolation("train ae: bad epochs or batch size");
  if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) {
    throw ContractViolation("train ae: train fraction must be in (0, 1)");
  }
  const std::set<std::string> unseen_set(unseen.begin(), unseen.end());
  std::vector<const BitImage*> seen, held;
  for (const auto& im : images) (unseen_set.count(im.source_key) ? held : seen).push_back(&im);

  // Own stream so the split does not mirror other shuffles seeded alike.
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0xae5eu};
  std::mt19937_64 rng(seq);
  std::shuffle(seen.begin(), seen.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * seen.size()));
  std::vector<const BitImage*> train(seen.begin(), seen.begin() + n_train);
  std::vector<const BitImage*> test(seen.begin() + n_train, seen.end());
  if (train.size() < static_cast<std::size_t>(cfg.batch)) {
    throw ContractViolation("train ae: " + std::to_string(train.size()) +
                            " training images is fewer than the batch size " +
                            std::to_string(cfg.batch));
  }

  AeResult result{nn::Autoencoder(kImagePixels, cfg.latent_dim), {}};
  auto& model = result.model;
  auto& report = result.report;
  nn::Rng init_rng(cfg.seed ^ 0xae00ae00ULL);
  model.init(init_rng);
  model.encoder1.bias.setConstant(cfg.relu_bias);
  model.encoder2.bias.setConstant(cfg.relu_bias);
  if (cfg.output_bias_from_mean) {
    const double m = std::clamp(image_matrix(train).mean(), 1e-6, 1.0 - 1e-6);
    model.decoder.bias.setConstant(std::log(m / (1.0 - m)));
  }
  for (auto* v : {&train, &test, &held}) {
    auto& keys = v == &train ? report.train_keys : v == &test ? report.test_keys : report.unseen_keys;
    for (const auto* im : *v) keys.push_back(im->source_key);
    std::sort(keys.begin(), keys.end());
  }
  report.dsc_untrained_test = mean_dsc(model, test);

  auto params = model.params();
  const auto steps = static_cast<long>((train.size() + cfg.batch - 1) / cfg.batch);
  nn::Adam adam({cfg.lr0, 0.9, 0.999, 1e-8, cfg.decay, steps}, params);
  const Matrix x_test = test.empty() ? Matrix() : image_matrix(test);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t a = 0; a < train.size(); a += cfg.batch) {
      const std::vector<const BitImage*> batch(train.begin() + a,
                                               train.begin() + std::min(train.size(), a + cfg.batch));
      const Matrix x = image_matrix(batch);
      nn::Autoencoder::Cache cache;
      const Matrix y = model.forward(x, &cache);
      const auto loss = nn::mse_loss(y, x);
      if (!std::isfinite(loss.value)) {
        throw NumericalError("train ae: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(a / cfg.batch));
      }
      model.zero_grad();
      model.backward(cache, loss.grad);
      adam.step(params);
      loss_sum += loss.value * static_cast<double>(batch.size());
    }
    AeEpoch e;
    e.epoch = epoch;
    e.train_mse = loss_sum / static_cast<double>(train.size());
    e.test_mse = test.empty() ? 0.0 : nn::mse_value(model.forward(x_test), x_test);
    report.trace.push_back(e);
    if (cfg.on_epoch) cfg.on_epoch(e);
  }

  report.dsc_train = mean_dsc(model, train);
  report.dsc_test = mean_dsc(model, test);
  report.dsc_unseen = mean_dsc(model, held);
  return result;
}

std::map<std::string, std::vector<double>> encode_images(const nn::Autoencoder& model,
                                                          const std::vector<BitImage>& images) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& im : images) {
    const Matrix z = model.encode(image_matrix({&im}));
    out[im.source_key] = std::vector<double>(z.data(), z.data() + z.size());
  }
  return out;
}

void write_ae_trace_csv(std::ostream& out, const std::vector<AeEpoch>& trace) {
  out << "epoch,train_mse,test_mse\n";
  char buf[96];
  for (const auto& e : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e.epoch, e.train_mse, e.test_mse);
    out << buf;
  }
}

nn::WeightArchive ae_archive(const AeResult& result) {
  nn::WeightArchive archive;
  result.model.to_archive(archive);
  auto join = [](const std::vector<std::string>& keys) {
    std::string s;
    for (const auto& k : keys) s += (s.empty() ? "" : ",") + k;
    return s;
  };
  archive.set_meta("unseen_keys", join(result.report.unseen_keys));
  archive.set_meta("test_keys", join(result.report.test_keys));
  return archive;
}

std::vector<std::string> archive_key_list(const nn::WeightArchive& archive, const std::string& field) {
  std::vector<std::string> out;
  if (!archive.has_meta(field)) return out;
  std::stringstream ss(archive.meta(field));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace lattice::pipeline

#include "lattice/nn/models.hpp"

#include <algorithm>
#include <sstream>

#include "lattice/error.hpp"

namespace lattice::nn {
namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw FormatError("bad integer list '" + s + "'");
    }
  }
  return out;
}

int meta_int(const WeightArchive& a, const std::string& key) {
  try {
    return std::stoi(a.meta(key));
  } catch (const std::invalid_argument&) {
    throw FormatError("weight metadata '" + key + "' is not an integer");
  }
}

}  // namespace

std::size_t dense_param_count(int in_dim, int out_dim) {
  return static_cast<std::size_t>(out_dim) * static_cast<std::size_t>(in_dim) +
         static_cast<std::size_t>(out_dim);
}

ParamCount count_params(const SequenceModelSpec& spec) {
  ParamCount c;
  int in = spec.input_dim;
  for (int n : spec.hidden) {
    c.recurrent += GruLayer::param_count(in, n);
    in = n;
  }
  c.head = dense_param_count(in, spec.output_dim);
  return c;
}

SequenceModel::SequenceModel(SequenceModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.hidden.empty()) throw ContractViolation("SequenceModel: need at least one GRU layer");
  int in = spec_.input_dim;
  for (int n : spec_.hidden) {
    layers.emplace_back(in, n);
    in = n;
  }
  head = DenseLayer(in, spec_.output_dim, Activation::Identity);
}

void SequenceModel::init(Rng& rng) {
  for (auto& l : layers) l.init(rng);
  head.init(rng);
}

Matrix SequenceModel::forward(const Matrix& x, int steps, int batch, Cache* cache) const {
  if (cache) {
    cache->steps = steps;
    cache->batch = batch;
    cache->layers.resize(layers.size());
  }
  Matrix h = layers[0].forward(x, steps, batch, cache ? &cache->layers[0] : nullptr);
  for (std::size_t i = 1; i < layers.size(); ++i) {
    h = layers[i].forward(h, steps, batch, cache ? &cache->layers[i] : nullptr);
  }
  return head.forward(h, cache ? &cache->head : nullptr);
}

Matrix SequenceModel::backward(const Cache& cache, const Matrix& d_out) {
  if (cache.layers.size() != layers.size()) {
    throw ContractViolation("SequenceModel::backward: missing forward cache");
  }
  Matrix d = head.backward(cache.head, d_out);
  for (std::size_t i = layers.size(); i-- > 0;) {
    d = layers[i].backward(cache.layers[i], d);
  }
  return d;
}

void SequenceModel::zero_grad() {
  for (auto& l : layers) l.zero_grad();
  head.zero_grad();
}

std::vector<ParamBlock> SequenceModel::params() {
  std::vector<ParamBlock> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto p = layers[i].params("gru" + std::to_string(i));
    out.insert(out.end(), p.begin(), p.end());
  }
  auto h = head.params("head");
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

std::size_t SequenceModel::param_count() const {
  std::size_t n = head.param_count();
  for (const auto& l : layers) n += l.param_count();
  return n;
}

void SequenceModel::to_archive(WeightArchive& archive) const {
  archive.set_meta("model", "gru_sequence");
  archive.set_meta("input_dim", std::to_string(spec_.input_dim));
  archive.set_meta("hidden", join_ints(spec_.hidden));
  archive.set_meta("output_dim", std::to_string(spec_.output_dim));
  archive.set_meta("gru_variant", "reset_after_double_bias");
  // params() only exposes non-const views; the values are not modified.
  archive_params(archive, const_cast<SequenceModel*>(this)->params());
}

SequenceModel SequenceModel::from_archive(const WeightArchive& archive) {
  if (archive.meta("model") != "gru_sequence") {
    throw FormatError("weight file holds a '" + archive.meta("model") + "' model, expected gru_sequence");
  }
  SequenceModelSpec spec;
  spec.input_dim = meta_int(archive, "input_dim");
  spec.hidden = split_ints(archive.meta("hidden"));
  spec.output_dim = meta_int(archive, "output_dim");
  SequenceModel model(spec);
  restore_params(archive, model.params());
  return model;
}

Autoencoder::Autoencoder(int pixels, int latent)
    : encoder1(pixels, latent, Activation::ReLU),
      encoder2(latent, latent, Activation::ReLU),
      decoder(latent, pixels, Activation::Sigmoid) {}

void Autoencoder::init(Rng& rng) {
  encoder1.init(rng);
  encoder2.init(rng);
  decoder.init(rng);
}

Matrix Autoencoder::encode(const Matrix& x) const { return encoder2.forward(encoder1.forward(x)); }

Matrix Autoencoder::decode(const Matrix& z) const { return decoder.forward(z); }

Matrix Autoencoder::forward(const Matrix& x, Cache* cache) const {
  const Matrix h1 = encoder1.forward(x, cache ? &cache->enc1 : nullptr);
  const Matrix h2 = encoder2.forward(h1, cache ? &cache->enc2 : nullptr);
  return decoder.forward(h2, cache ? &cache->dec : nullptr);
}

Matrix Autoencoder::backward(const Cache& cache, const Matrix& d_out) {
  Matrix d = decoder.backward(cache.dec, d_out);
  d = encoder2.backward(cache.enc2, d);
  return encoder1.backward(cache.enc1, d);
}

void Autoencoder::zero_grad() {
  encoder1.zero_grad();
  encoder2.zero_grad();
  decoder.zero_grad();
}

std::vector<ParamBlock> Autoencoder::params() {
  std::vector<ParamBlock> out;
  auto a = encoder1.params("enc1");
  auto b = encoder2.params("enc2");
  auto c = decoder.params("dec");
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::size_t Autoencoder::param_count() const {
  return encoder1.param_count() + encoder2.param_count() + decoder.param_count();
}

void Autoencoder::to_archive(WeightArchive& archive) const {
  archive.set_meta("model", "autoencoder");
  archive.set_meta("pixels", std::to_string(pixels()));
  archive.set_meta("latent_dim", std::to_string(latent_dim()));
  archive_params(archive, const_cast<Autoencoder*>(this)->params());
}

Autoencoder Autoencoder::from_archive(const WeightArchive& archive) {
  if (archive.meta("model") != "autoencoder") {
    throw FormatError("weight file holds a '" + archive.meta("model") + "' model, expected autoencoder");
  }
  Autoencoder ae(meta_int(archive, "pixels"), meta_int(archive, "latent_dim"));
  restore_params(archive, ae.params());
  return ae;
}

void archive_params(WeightArchive& archive, const std::vector<ParamBlock>& blocks) {
  for (const auto& b : blocks) archive.add_blob(b.name, b.value, b.size);
}

void restore_params(const WeightArchive& archive, const std::vector<ParamBlock>& blocks) {
  for (const auto& b : blocks) {
    const auto& values = archive.blob(b.name, b.size);
    std::copy(values.begin(), values.end(), b.value);
  }
}

}  // namespace lattice::nn

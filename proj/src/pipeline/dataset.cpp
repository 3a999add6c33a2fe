#include "lattice/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "lattice/binary_io.hpp"
#include "lattice/error.hpp"
#include "lattice/keyspace.hpp"
#include "lattice/pipeline/parallel.hpp"

namespace lattice::pipeline {

TrainingPoint build_features(const SimRecord& record, std::span<const double> latent,
                             const MaterialConfig& mat) {
  if (latent.size() != static_cast<std::size_t>(kLatentDim)) {
    throw ContractViolation("build_features: latent vector has " + std::to_string(latent.size()) +
                            " entries, expected " + std::to_string(kLatentDim));
  }
  if (!(record.strain_rate > 0.0)) throw ContractViolation("build_features: strain rate must be > 0");
  const double t_e = wave_arrival(record.height_mm, mat);
  const double log_rate = std::log10(record.strain_rate);

  TrainingPoint p;
  p.features.resize(kOutputSteps, kFeatureCols);
  p.targets.resize(kOutputSteps, kTargetCols);
  for (int j = 0; j < kOutputSteps; ++j) {
    for (int c = 0; c < kLatentDim; ++c) p.features(j, c) = latent[static_cast<std::size_t>(c)];
    p.features(j, kColThickness) = record.thickness_mm;
    p.features(j, kColFinalStrain) = record.final_strain;
    p.features(j, kColLogRate) = log_rate;
    p.features(j, kColStrain) = record.strain[j];
    p.features(j, kColTime) = record.time[j];
    p.features(j, kColWave) = record.time[j] > t_e ? 1.0 : 0.0;
    p.targets(j, 0) = record.rf[j];
    p.targets(j, 1) = record.pd[j];
    p.targets(j, 2) = record.dmd[j];
    p.targets(j, 3) = record.else_[j];
  }
  p.meta = {record.label, record.thickness_mm, record.strain_rate, record.final_strain};
  return p;
}

SimRecord augment_one(const SimRecord& src, double u) {
  if (!(u > 0.0 && u <= src.final_strain)) {
    throw ContractViolation("augment: final strain " + std::to_string(u) +
                            " is outside the record span (0, " + std::to_string(src.final_strain) + "]");
  }
  if (src.strain.front() != 0.0 || src.strain.back() != src.final_strain ||
      !std::is_sorted(src.strain.begin(), src.strain.end(), std::less_equal<>())) {
    throw ContractViolation("augment: source strain grid must rise from 0 to its final strain");
  }

  SimRecord out = src;
  out.final_strain = u;
  const Series* in_series[] = {&src.time, &src.rf, &src.pd, &src.dmd, &src.else_};
  Series* out_series[] = {&out.time, &out.rf, &out.pd, &out.dmd, &out.else_};

  for (int j = 0; j < kOutputSteps; ++j) {
    const double s = u * (static_cast<double>(j) / (kOutputSteps - 1));
    out.strain[j] = s;
    const auto hi = std::upper_bound(src.strain.begin(), src.strain.end(), s);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(hi - src.strain.begin() - 1, 0));
    if (src.strain[k] == s || k + 1 >= src.strain.size()) {
      for (int a = 0; a < 5; ++a) (*out_series[a])[j] = (*in_series[a])[k];
      continue;
    }
    const double w = (s - src.strain[k]) / (src.strain[k + 1] - src.strain[k]);
    for (int a = 0; a < 5; ++a) {
      const double v0 = (*in_series[a])[k];
      const double v1 = (*in_series[a])[k + 1];
      // Clamp so rounding can never leave the bracketing pair.
      (*out_series[a])[j] = std::clamp(v0 + w * (v1 - v0), std::min(v0, v1), std::max(v0, v1));
    }
  }
  return out;
}

std::vector<SimRecord> augment(const SimRecord& source, std::mt19937_64& rng, int k) {
  if (k < 0) throw ContractViolation("augment: k must be >= 0");
  std::uniform_real_distribution<double> draw(kAugmentMin, kAugmentMax);
  std::vector<SimRecord> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(augment_one(source, draw(rng)));
  return out;
}

const std::vector<double>& Dataset::latent(const std::string& label) const {
  const auto it = latents.find(label);
  if (it == latents.end()) throw ContractViolation("dataset has no latent vector for '" + label + "'");
  return it->second;
}

TrainingPoint Dataset::point(std::size_t i) const {
  if (i >= records.size()) throw ContractViolation("Dataset::point: index out of range");
  return build_features(records[i], latent(records[i].label), material);
}

void Dataset::append(const Dataset& other, std::uint64_t sim_offset) {
  for (const auto& [label, z] : other.latents) {
    const auto [it, inserted] = latents.emplace(label, z);
    if (!inserted && it->second != z) {
      throw ContractViolation("Dataset::append: conflicting latent vectors for '" + label + "'");
    }
  }
  records.insert(records.end(), other.records.begin(), other.records.end());
  for (auto id : other.sim_ids) sim_ids.push_back(id + sim_offset);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.layout_version = layout_version;
  out.material = material;
  std::set<std::string> used;
  out.records.reserve(indices.size());
  out.sim_ids.reserve(indices.size());
  for (auto i : indices) {
    out.records.push_back(records.at(i));
    out.sim_ids.push_back(sim_ids.at(i));
    used.insert(records[i].label);
  }
  for (const auto& label : used) out.latents.emplace(label, latent(label));
  return out;
}

namespace {

constexpr char kDatasetMagic[9] = "LATDSET\0";

void put_material(std::ostream& out, const MaterialConfig& m) {
  for (double v : {m.E, m.rho, m.A_jc, m.B_jc, m.n_jc, m.C_jc, m.eps0_dot, m.eps_d, m.eps_f,
                   m.d_max, m.k_b}) {
    binio::put_f64(out, v);
  }
}

MaterialConfig get_material(std::istream& in) {
  MaterialConfig m;
  for (double* v : {&m.E, &m.rho, &m.A_jc, &m.B_jc, &m.n_jc, &m.C_jc, &m.eps0_dot, &m.eps_d,
                    &m.eps_f, &m.d_max, &m.k_b}) {
    *v = binio::get_f64(in);
  }
  return m;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  if (data.sim_ids.size() != data.records.size()) {
    throw ContractViolation("write_dataset: sim id count does not match record count");
  }
  binio::put_magic(out, kDatasetMagic);
  binio::put_u32(out, data.layout_version);
  binio::put_u32(out, kLatentDim);
  put_material(out, data.material);
  binio::put_u64(out, data.latents.size());
  for (const auto& [label, z] : data.latents) {
    if (z.size() != static_cast<std::size_t>(kLatentDim)) {
      throw ContractViolation("write_dataset: latent for '" + label + "' has the wrong length");
    }
    binio::put_string(out, label);
    binio::put_f64s(out, z);
  }
  binio::put_u64(out, data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    binio::put_u64(out, data.sim_ids[i]);
    binio::put_string(out, r.label);
    binio::put_f64(out, r.thickness_mm);
    binio::put_f64(out, r.strain_rate);
    binio::put_f64(out, r.height_mm);
    binio::put_f64(out, r.final_strain);
    for (const Series* s : {&r.time, &r.strain, &r.rf, &r.pd, &r.dmd, &r.else_}) {
      binio::put_f64s(out, *s);
    }
  }
}

Dataset read_dataset(std::istream& in) {
  binio::expect_magic(in, kDatasetMagic, "dataset");
  Dataset data;
  data.layout_version = binio::get_u32(in);
  if (data.layout_version != kFeatureLayoutVersion) {
    throw FormatError("dataset feature layout version " + std::to_string(data.layout_version) +
                      " does not match this build (" + std::to_string(kFeatureLayoutVersion) + ")");
  }
  const std::uint32_t dim = binio::get_u32(in);
  if (dim != static_cast<std::uint32_t>(kLatentDim)) {
    throw FormatError("dataset latent dimension " + std::to_string(dim) + " != " +
                      std::to_string(kLatentDim));
  }
  data.material = get_material(in);
  const std::uint64_t n_latents = binio::get_u64(in);
  for (std::uint64_t i = 0; i < n_latents; ++i) {
    std::string label = binio::get_string(in, 256);
    std::vector<double> z(kLatentDim);
    binio::get_f64s(in, z);
    data.latents.emplace(std::move(label), std::move(z));
  }
  const std::uint64_t n_records = binio::get_u64(in);
  for (std::uint64_t i = 0; i < n_records; ++i) {
    data.sim_ids.push_back(binio::get_u64(in));
    SimRecord r;
    r.label = binio::get_string(in, 256);
    r.thickness_mm = binio::get_f64(in);
    r.strain_rate = binio::get_f64(in);
    r.height_mm = binio::get_f64(in);
    r.final_strain = binio::get_f64(in);
    for (Series* s : {&r.time, &r.strain, &r.rf, &r.pd, &r.dmd, &r.else_}) {
      binio::get_f64s(in, *s);
    }
    data.records.push_back(std::move(r));
  }
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset '" + path + "'");
  write_dataset(out, data);
  if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "point,sim_id,key,step";
  for (int c = 0; c < kFeatureCols; ++c) out << ",f" << c;
  for (const char* name : kOutputNames) out << ',' << name;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    const TrainingPoint p = data.point(i);
    for (int j = 0; j < kOutputSteps; ++j) {
      out << i << ',' << data.sim_ids[i] << ',' << p.meta.key << ',' << j;
      for (int c = 0; c < kFeatureCols; ++c) {
        std::snprintf(buf, sizeof buf, ",%.17g", p.features(j, c));
        out << buf;
      }
      for (int c = 0; c < kTargetCols; ++c) {
        std::snprintf(buf, sizeof buf, ",%.17g", p.targets(j, c));
        out << buf;
      }
      out << '\n';
    }
  }
}

std::vector<GeometrySource> key_sources(const std::vector<DesignKey>& keys) {
  std::vector<GeometrySource> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back({format_key(k), build_lattice(k)});
  return out;
}

Dataset generate_dataset(const std::vector<GeometrySource>& sources,
                         const std::map<std::string, std::vector<double>>& latents,
                         const GenerateConfig& config, const MaterialConfig& mat) {
  if (config.n_sims < 1) throw ContractViolation("generate: need at least one simulation");
  if (config.augment_k < 1) throw ContractViolation("generate: augmentation count must be >= 1");
  if (sources.empty()) throw ContractViolation("generate: no geometries to sample from");
  mat.validate();

  Dataset data;
  data.material = mat;
  for (const auto& s : sources) {
    const auto it = latents.find(s.label);
    if (it == latents.end()) throw ContractViolation("generate: no latent vector for '" + s.label + "'");
    data.latents[s.label] = it->second;
  }

  struct Draw {
    std::size_t source;
    double thickness;
    double rate;
  };
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
  std::uniform_real_distribution<double> thick(kMinThicknessMm, kMaxThicknessMm);
  std::uniform_real_distribution<double> log_rate(kMinLog10Rate, kMaxLog10Rate);
  std::vector<Draw> draws(static_cast<std::size_t>(config.n_sims));
  for (auto& d : draws) {
    d.source = pick(rng);
    d.thickness = thick(rng);
    d.rate = std::pow(10.0, log_rate(rng));
  }

  std::vector<std::vector<SimRecord>> slots(draws.size());
  parallel_for(draws.size(), config.threads, [&](std::size_t i) {
    const auto& d = draws[i];
    const auto& src = sources[d.source];
    const SimRecord rec =
        simulate_curves(src.curves, src.label, d.thickness, d.rate, kDefaultFinalStrain, mat);
    // Per-simulation stream so results do not depend on scheduling.
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i), 0x5a17u};
    std::mt19937_64 aug_rng(seq);
    slots[i] = augment(rec, aug_rng, config.augment_k);
  });

  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (auto& r : slots[i]) {
      data.records.push_back(std::move(r));
      data.sim_ids.push_back(i);
    }
  }
  return data;
}

Split split_dataset(const std::vector<std::string>& labels, const SplitSpec& spec) {
  const double sum = spec.train_frac + spec.val_frac + spec.test1_frac;
  if (spec.train_frac < 0.0 || spec.val_frac < 0.0 || spec.test1_frac < 0.0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ContractViolation("split: fractions must be non-negative and sum to 1");
  }
  const std::set<std::string> heldout(spec.heldout.begin(), spec.heldout.end());

  Split split;
  std::vector<std::size_t> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (heldout.count(labels[i]) ? split.test2 : seen).push_back(i);
  }
  std::mt19937_64 rng(spec.seed);
  std::shuffle(seen.begin(), seen.end(), rng);

  const auto n = seen.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(spec.train_frac * n)));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(spec.val_frac * n)));
  split.train.assign(seen.begin(), seen.begin() + n_train);
  split.val.assign(seen.begin() + n_train, seen.begin() + n_train + n_val);
  split.test1.assign(seen.begin() + n_train + n_val, seen.end());

  std::vector<int> owner(labels.size(), 0);
  for (const auto* part : {&split.train, &split.val, &split.test1, &split.test2}) {
    for (auto i : *part) ++owner[i];
  }
  if (std::any_of(owner.begin(), owner.end(), [](int c) { return c != 1; })) {
    throw ContractViolation("internal error: split partitions overlap or miss points");
  }
  return split;
}

Split split_dataset(const Dataset& data, const SplitSpec& spec) {
  std::vector<std::string> labels;
  labels.reserve(data.size());
  for (const auto& r : data.records) labels.push_back(r.label);
  return split_dataset(labels, spec);
}

void write_split_csv(std::ostream& out, const Split& split) {
  out << "index,partition\n";
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"train", &split.train}, {"val", &split.val}, {"test1", &split.test1}, {"test2", &split.test2}};
  for (const auto& [name, idx] : parts) {
    for (auto i : *idx) out << i << ',' << name << '\n';
  }
}

Split read_split_csv(std::istream& in) {
  Split split;
  std::string line;
  if (!std::getline(in, line) || line != "index,partition") {
    throw FormatError("split file: expected header 'index,partition'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::size_t index = 0;
    try {
      std::size_t used = 0;
      index = std::stoull(line.substr(0, comma), &used);
      if (comma == std::string::npos || used != comma) throw std::invalid_argument("index");
    } catch (const std::exception&) {
      throw FormatError("split file line " + std::to_string(line_no) + ": bad index");
    }
    const std::string part = line.substr(comma + 1);
    if (part == "train") {
      split.train.push_back(index);
    } else if (part == "val") {
      split.val.push_back(index);
    } else if (part == "test1") {
      split.test1.push_back(index);
    } else if (part == "test2") {
      split.test2.push_back(index);
    } else {
      throw FormatError("split file line " + std::to_string(line_no) + ": unknown partition '" + part + "'");
    }
  }
  return split;
}

void save_split(const std::string& path, const Split& split) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split file " + path);
  write_split_csv(out, split);
  if (!out) throw IoError("failed writing split file " + path);
}

Split load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split file " + path);
  return read_split_csv(in);
}

std::vector<std::string> choose_heldout(std::vector<std::string> labels, std::size_t count,
                                        std::uint64_t seed) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (count > labels.size()) {
    throw ContractViolation("choose_heldout: asked for " + std::to_string(count) + " of " +
                            std::to_string(labels.size()) + " labels");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  labels.resize(count);
  std::sort(labels.begin(), labels.end());
  return labels;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_simulation(
    const Dataset& data, double train_frac, std::uint64_t seed) {
  if (!(train_frac >= 0.0 && train_frac <= 1.0)) {
    throw ContractViolation("split_by_simulation: fraction must be in [0, 1]");
  }
  std::vector<std::uint64_t> ids(data.sim_ids.begin(), data.sim_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * ids.size()));
  const std::set<std::uint64_t> train_ids(ids.begin(), ids.begin() + n_train);

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (train_ids.count(data.sim_ids[i]) ? out.first : out.second).push_back(i);
  }
  return out;
}

}  // namespace lattice::pipeline

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lattice/geometry.hpp"
#include "lattice/nn/tensor.hpp"
#include "lattice/oracle.hpp"

namespace lattice::pipeline {

using nn::Matrix;

// Bump whenever the column layout below changes.
inline constexpr std::uint32_t kFeatureLayoutVersion = 1;
inline constexpr int kLatentDim = 100;
inline constexpr int kColThickness = kLatentDim;      // 100
inline constexpr int kColFinalStrain = kLatentDim + 1;
inline constexpr int kColLogRate = kLatentDim + 2;
inline constexpr int kColStrain = kLatentDim + 3;
inline constexpr int kColTime = kLatentDim + 4;
inline constexpr int kColWave = kLatentDim + 5;       // elastic-wave indicator
inline constexpr int kFeatureCols = kLatentDim + 6;   // 106
inline constexpr int kTargetCols = 4;                 // rf, pd, dmd, else

inline constexpr const char* kOutputNames[kTargetCols] = {"rf", "pd", "dmd", "else"};

struct PointMeta {
  std::string key;
  double thickness_mm = 0.0;
  double strain_rate = 0.0;
  double final_strain = 0.0;
};

struct TrainingPoint {
  Matrix features;  // kOutputSteps x kFeatureCols
  Matrix targets;   // kOutputSteps x kTargetCols
  PointMeta meta;
};

/// Assembles the per-step feature and target matrices for one record.
/// Throws ContractViolation when the latent vector has the wrong length.
TrainingPoint build_features(const SimRecord& record, std::span<const double> latent,
                             const MaterialConfig& mat);

/// Resamples `source` onto a 50-point uniform strain grid over [0, u] by
/// linear interpolation. Grid points that coincide with source nodes copy
/// the node values exactly.
SimRecord augment_one(const SimRecord& source, double u);

inline constexpr double kAugmentMin = 0.05;
inline constexpr double kAugmentMax = 0.20;

/// k copies with u ~ Uniform[kAugmentMin, kAugmentMax].
std::vector<SimRecord> augment(const SimRecord& source, std::mt19937_64& rng, int k);

/// Simulation records plus the latent table needed to build features.
/// Points are built on demand, which keeps large sets small on disk.
struct Dataset {
  std::uint32_t layout_version = kFeatureLayoutVersion;
  MaterialConfig material;
  std::map<std::string, std::vector<double>> latents;
  std::vector<SimRecord> records;
  std::vector<std::uint64_t> sim_ids;  // source simulation of each record

  std::size_t size() const { return records.size(); }
  TrainingPoint point(std::size_t i) const;
  const std::vector<double>& latent(const std::string& label) const;

  /// Appends `other`'s records (with sim ids offset by `sim_offset`) and
  /// latents. Labels present in both must carry identical latents.
  void append(const Dataset& other, std::uint64_t sim_offset);
  /// Copy holding only the records at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

void write_dataset(std::ostream& out, const Dataset& data);
/// Throws FormatError on a bad magic or a feature layout version mismatch.
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// One row per (point, step): point, sim_id, key, step, f0..f105, rf, pd, dmd, else.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// A geometry the generator can simulate: key-system designs use the
/// 8-digit key as label.
struct GeometrySource {
  std::string label;
  CurveSet curves;
};

std::vector<GeometrySource> key_sources(const std::vector<DesignKey>& keys);

struct GenerateConfig {
  int n_sims = 1500;
  int augment_k = 12;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Samples (geometry, thickness, rate) uniformly / log-uniformly, runs the
/// oracle to 20 % strain and augments every run k times. Output depends only
/// on the sources, config and seed, never on the thread count.
/// `latents` must hold an entry for every source label.
Dataset generate_dataset(const std::vector<GeometrySource>& sources,
                         const std::map<std::string, std::vector<double>>& latents,
                         const GenerateConfig& config, const MaterialConfig& mat);

struct SplitSpec {
  double train_frac = 0.68;
  double val_frac = 0.12;
  double test1_frac = 0.20;
  std::vector<std::string> heldout;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train, val, test1, test2;
};

/// Points whose label is held out go to test2; the rest are shuffled and cut
/// by the fractions. Throws ContractViolation if fractions do not sum to 1.
Split split_dataset(const std::vector<std::string>& labels, const SplitSpec& spec);
Split split_dataset(const Dataset& data, const SplitSpec& spec);

/// `index,partition` rows with partitions train, val, test1, test2.
void write_split_csv(std::ostream& out, const Split& split);
/// Throws FormatError on unknown partitions or malformed rows.
Split read_split_csv(std::istream& in);
void save_split(const std::string& path, const Split& split);
Split load_split(const std::string& path);

/// `count` labels chosen uniformly without replacement, returned sorted.
std::vector<std::string> choose_heldout(std::vector<std::string> labels, std::size_t count,
                                        std::uint64_t seed);

/// Splits records so all augmentations of one simulation land together.
/// Returns {train, rest}.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_simulation(
    const Dataset& data, double train_frac, std::uint64_t seed);

}  // namespace lattice::pipeline

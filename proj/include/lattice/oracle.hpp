#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "lattice/geometry.hpp"
#include "lattice/keyspace.hpp"

namespace lattice {

class Config;

/// Johnson-Cook-form material and crush-model constants (SI units).
struct MaterialConfig {
  double E = 113.8e9;       // Pa
  double rho = 4430.0;      // kg/m^3
  double A_jc = 1098e6;     // Pa
  double B_jc = 1092e6;     // Pa
  double n_jc = 0.93;
  double C_jc = 0.014;
  double eps0_dot = 1.0;    // 1/s
  double eps_d = 0.05;      // damage onset plastic strain
  double eps_f = 0.30;      // failure plastic strain
  double d_max = 0.8;       // maximum load knockdown
  double k_b = 0.02;        // slenderness softening coefficient

  /// Throws DomainError if an invariant is violated.
  void validate() const;

  /// Reads `material.<field>` entries, keeping defaults for absent keys.
  static MaterialConfig from_config(const Config& config);
  void to_config(Config& config) const;

  bool operator==(const MaterialConfig&) const = default;
};

inline constexpr int kOutputSteps = 50;
// Fine integration grid; every second point is kept.
inline constexpr int kFineSteps = 2 * kOutputSteps - 1;
inline constexpr double kLatticeHeightMm = 10.0;
inline constexpr double kDefaultFinalStrain = 0.20;

using Series = std::array<double, kOutputSteps>;

/// One crush run. `label` is the 8-digit key for key-system designs or a
/// free-form geometry name.
struct SimRecord {
  std::string label;
  double thickness_mm = 0.0;
  double strain_rate = 0.0;
  double height_mm = kLatticeHeightMm;
  double final_strain = kDefaultFinalStrain;
  Series time{};    // s
  Series strain{};
  Series rf{};      // N
  Series pd{};      // J
  Series dmd{};     // J
  Series else_{};   // J

  bool operator==(const SimRecord&) const = default;
};

/// Time for the elastic wave to cross the lattice height: H / sqrt(E/rho).
double wave_arrival(double height_mm, const MaterialConfig& mat);

/// (A + B eps_p^n)(1 + C ln(max(rate/eps0_dot, 1))), isothermal.
double flow_stress(double eps_p, double rate, const MaterialConfig& mat);

struct CrushInputs {
  double thickness_mm = 0.5;
  double strain_rate = 1e3;
  double final_strain = kDefaultFinalStrain;
  double height_mm = kLatticeHeightMm;
};

/// Integrates the column-crush model for precomputed geometry features.
/// External work (trapezoidal) is split exactly into plastic, damage and
/// elastic energies at every step.
SimRecord simulate_features(const GeomFeatures& features, std::string label,
                            const CrushInputs& inputs, const MaterialConfig& mat);

/// Builds the 2x2 / 20 mm lattice for `key` and runs the crush model.
SimRecord simulate(const DesignKey& key, double thickness_mm, double strain_rate,
                   double final_strain, const MaterialConfig& mat);

/// Same as simulate() for an arbitrary skeleton already scaled to its box.
SimRecord simulate_curves(const CurveSet& curves, std::string label, double thickness_mm,
                          double strain_rate, double final_strain, const MaterialConfig& mat);

// CSV: one row per step with columns key, thickness_mm, rate_1_per_s,
// final_strain, step, time_s, strain, rf_N, pd_J, dmd_J, else_J.
void write_records_csv(std::ostream& out, const std::vector<SimRecord>& records);
std::vector<SimRecord> read_records_csv(std::istream& in);

// Binary batch: magic, version, count, then per record the label and
// little-endian doubles.
inline constexpr std::uint32_t kRecordBatchVersion = 1;
void write_records_binary(std::ostream& out, const std::vector<SimRecord>& records);
std::vector<SimRecord> read_records_binary(std::istream& in);
void save_records(const std::string& path, const std::vector<SimRecord>& records);
std::vector<SimRecord> load_records(const std::string& path);

}  // namespace lattice

#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "lattice/pipeline/dataset.hpp"

namespace lattice::pipeline {

inline constexpr double kForceFloorN = 0.25;
inline constexpr double kEnergyFloorJ = 1e-2;

using OutputArray = std::array<double, kTargetCols>;

/// Range floors per output column: force first, then the three energies.
OutputArray default_floors();

/// MAE over the steps of one column divided by max(range of truth, floor).
double relative_mae(const nn::Matrix& truth, const nn::Matrix& pred, int col, double floor);

struct PointScore {
  std::size_t point = 0;
  OutputArray rmae{};
};

struct SetScores {
  std::string name;
  std::vector<PointScore> points;  // aligned with the prediction list

  OutputArray mean() const;
  OutputArray std_dev() const;  // population std across points
};

/// Scores predictions for dataset points; `preds[i]` belongs to `points[i]`.
SetScores score_set(const std::string& name, const Dataset& data,
                    const std::vector<std::size_t>& points, const std::vector<nn::Matrix>& preds,
                    const OutputArray& floors = default_floors());

struct SetSummary {
  std::string name;
  std::size_t n_points = 0;
  int repetitions = 0;
  OutputArray mean{};        // mean over repetitions of the per-run mean
  OutputArray std_reps{};    // sample std of the per-run means (0 for one run)
  OutputArray std_points{};  // per-run std across points, averaged over runs
};

struct EvalReport {
  std::vector<SetSummary> sets;
  const SetSummary& set(const std::string& name) const;
};

/// `runs[r]` holds the scored sets of repetition r; sets are matched by name.
EvalReport summarize(const std::vector<std::vector<SetScores>>& runs);

void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_text(std::ostream& out, const EvalReport& report);

struct PercentileCase {
  int output = 0;
  int percentile = 0;
  std::size_t slot = 0;  // index into SetScores::points
  double rmae = 0.0;
};

inline constexpr int kDumpPercentiles[] = {25, 50, 75, 100};

/// Nearest-rank picks, chosen independently for every output column.
std::vector<PercentileCase> percentile_cases(const SetScores& scores);

/// Ground truth next to prediction for every percentile case.
void write_percentile_dump(std::ostream& out, const SetScores& scores, const Dataset& data,
                           const std::vector<nn::Matrix>& preds);

}  // namespace lattice::pipeline

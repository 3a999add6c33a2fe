#include "lattice/pipeline/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "lattice/error.hpp"

namespace lattice::pipeline {

OutputArray default_floors() { return {kForceFloorN, kEnergyFloorJ, kEnergyFloorJ, kEnergyFloorJ}; }

double relative_mae(const nn::Matrix& truth, const nn::Matrix& pred, int col, double floor) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols() || col < 0 || col >= truth.cols()) {
    throw ContractViolation("relative_mae: shape mismatch");
  }
  const auto t = truth.col(col);
  const double mae = (t - pred.col(col)).cwiseAbs().mean();
  const double range = t.maxCoeff() - t.minCoeff();
  return mae / std::max(range, floor);
}

OutputArray SetScores::mean() const {
  OutputArray m{};
  if (points.empty()) return m;
  for (const auto& p : points) {
    for (int c = 0; c < kTargetCols; ++c) m[c] += p.rmae[c];
  }
  for (auto& v : m) v /= static_cast<double>(points.size());
  return m;
}

OutputArray SetScores::std_dev() const {
  OutputArray s{};
  if (points.empty()) return s;
  const OutputArray m = mean();
  for (const auto& p : points) {
    for (int c = 0; c < kTargetCols; ++c) s[c] += (p.rmae[c] - m[c]) * (p.rmae[c] - m[c]);
  }
  for (auto& v : s) v = std::sqrt(v / static_cast<double>(points.size()));
  return s;
}

SetScores score_set(const std::string& name, const Dataset& data,
                    const std::vector<std::size_t>& points, const std::vector<nn::Matrix>& preds,
                    const OutputArray& floors) {
  if (points.size() != preds.size()) throw ContractViolation("score_set: one prediction per point");
  SetScores s;
  s.name = name;
  s.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const TrainingPoint p = data.point(points[i]);
    PointScore ps;
    ps.point = points[i];
    for (int c = 0; c < kTargetCols; ++c) ps.rmae[c] = relative_mae(p.targets, preds[i], c, floors[c]);
    s.points.push_back(ps);
  }
  return s;
}

const SetSummary& EvalReport::set(const std::string& name) const {
  for (const auto& s : sets) {
    if (s.name == name) return s;
  }
  throw ContractViolation("evaluation report has no set '" + name + "'");
}

EvalReport summarize(const std::vector<std::vector<SetScores>>& runs) {
  EvalReport report;
  if (runs.empty()) return report;
  for (const auto& first : runs.front()) {
    SetSummary sum;
    sum.name = first.name;
    sum.n_points = first.points.size();
    std::vector<OutputArray> means;
    for (const auto& run : runs) {
      const auto it = std::find_if(run.begin(), run.end(), [&](const SetScores& s) { return s.name == first.name; });
      if (it == run.end()) throw ContractViolation("summarize: set '" + first.name + "' missing from a run");
      means.push_back(it->mean());
      const OutputArray sd = it->std_dev();
      for (int c = 0; c < kTargetCols; ++c) sum.std_points[c] += sd[c];
    }
    sum.repetitions = static_cast<int>(means.size());
    const double r = static_cast<double>(means.size());
    for (int c = 0; c < kTargetCols; ++c) {
      sum.std_points[c] /= r;
      for (const auto& m : means) sum.mean[c] += m[c];
      sum.mean[c] /= r;
      if (means.size() > 1) {
        double ss = 0.0;
        for (const auto& m : means) ss += (m[c] - sum.mean[c]) * (m[c] - sum.mean[c]);
        sum.std_reps[c] = std::sqrt(ss / (r - 1.0));
      }
    }
    report.sets.push_back(sum);
  }
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "set,output,n_points,repetitions,rmae_mean,rmae_std_reps,rmae_std_points\n";
  char buf[256];
  for (const auto& s : report.sets) {
    for (int c = 0; c < kTargetCols; ++c) {
      std::snprintf(buf, sizeof buf, "%s,%s,%zu,%d,%.17g,%.17g,%.17g\n", s.name.c_str(),
                    kOutputNames[c], s.n_points, s.repetitions, s.mean[c], s.std_reps[c],
                    s.std_points[c]);
      out << buf;
    }
  }
}

void write_report_text(std::ostream& out, const EvalReport& report) {
  char buf[256];
  out << "relative MAE (%), mean +- std over repetitions\n";
  std::snprintf(buf, sizeof buf, "%-10s %8s", "set", "points");
  out << buf;
  for (const char* n : kOutputNames) {
    std::snprintf(buf, sizeof buf, " %18s", n);
    out << buf;
  }
  out << '\n';
  for (const auto& s : report.sets) {
    std::snprintf(buf, sizeof buf, "%-10s %8zu", s.name.c_str(), s.n_points);
    out << buf;
    for (int c = 0; c < kTargetCols; ++c) {
      std::snprintf(buf, sizeof buf, " %9.3f +- %6.3f", 100.0 * s.mean[c], 100.0 * s.std_reps[c]);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<PercentileCase> percentile_cases(const SetScores& scores) {
  std::vector<PercentileCase> out;
  const std::size_t n = scores.points.size();
  if (n == 0) return out;
  for (int c = 0; c < kTargetCols; ++c) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores.points[a].rmae[c] < scores.points[b].rmae[c];
    });
    for (int pct : kDumpPercentiles) {
      const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
      const std::size_t slot = order[std::clamp<std::size_t>(rank, 1, n) - 1];
      out.push_back({c, pct, slot, scores.points[slot].rmae[c]});
    }
  }
  return out;
}

void write_percentile_dump(std::ostream& out, const SetScores& scores, const Dataset& data,
                           const std::vector<nn::Matrix>& preds) {
  if (preds.size() != scores.points.size()) throw ContractViolation("percentile dump: prediction count");
  out << "set,output,percentile,point,key,rmae,step,strain,time_s,truth,prediction\n";
  char buf[320];
  for (const auto& pc : percentile_cases(scores)) {
    const std::size_t point = scores.points[pc.slot].point;
    const TrainingPoint p = data.point(point);
    for (int t = 0; t < kOutputSteps; ++t) {
      std::snprintf(buf, sizeof buf, "%s,%s,%d,%zu,%s,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n",
                    scores.name.c_str(), kOutputNames[pc.output], pc.percentile, point,
                    p.meta.key.c_str(), pc.rmae, t, p.features(t, kColStrain),
                    p.features(t, kColTime), p.targets(t, pc.output), preds[pc.slot](t, pc.output));
      out << buf;
    }
  }
}

}  // namespace lattice::pipeline

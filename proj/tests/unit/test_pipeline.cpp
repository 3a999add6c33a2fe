#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lattice/error.hpp"
#include "lattice/nn/scaler.hpp"
#include "lattice/pipeline/autoencoder.hpp"
#include "lattice/pipeline/dataset.hpp"
#include "lattice/pipeline/evaluate.hpp"
#include "lattice/pipeline/gru_training.hpp"
#include "lattice/pipeline/transfer.hpp"

using namespace lattice;
using namespace lattice::pipeline;

namespace {

std::map<std::string, std::vector<double>> random_latents(const std::vector<GeometrySource>& src,
                                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::map<std::string, std::vector<double>> out;
  for (const auto& s : src) {
    std::vector<double> z(kLatentDim);
    for (auto& v : z) v = n(rng);
    out[s.label] = z;
  }
  return out;
}

Dataset small_dataset(int n_sims, int k, std::uint64_t seed,
                      std::vector<std::string> keys = {"00220000", "00231121", "10330021", "21441121"}) {
  std::vector<DesignKey> parsed;
  for (const auto& s : keys) parsed.push_back(parse_key(s));
  const auto src = key_sources(parsed);
  GenerateConfig cfg;
  cfg.n_sims = n_sims;
  cfg.augment_k = k;
  cfg.seed = seed;
  return generate_dataset(src, random_latents(src, 99), cfg, MaterialConfig{});
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

GruTrainConfig tiny_gru(int epochs) {
  GruTrainConfig c;
  c.hidden = {8, 8};
  c.epochs = epochs;
  c.batch = 10;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("feature assembly") {
  const MaterialConfig m;
  const SimRecord r = simulate(parse_key("00231121"), 0.4, 1e3, 0.15, m);
  std::vector<double> z(kLatentDim);
  for (int i = 0; i < kLatentDim; ++i) z[i] = 0.01 * i;
  const TrainingPoint p = build_features(r, z, m);
  CHECK(p.features.rows() == kOutputSteps);
  CHECK(p.features.cols() == 106);
  CHECK(p.targets.cols() == 4);
  const double te = wave_arrival(r.height_mm, m);
  for (int j = 0; j < kOutputSteps; ++j) {
    CHECK(p.features(j, 0) == 0.0);
    CHECK(p.features(j, 99) == doctest::Approx(0.99));
    CHECK(p.features(j, 100) == 0.4);
    CHECK(p.features(j, 101) == 0.15);
    CHECK(p.features(j, 102) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(p.features(j, 103) == r.strain[j]);
    CHECK(p.features(j, 104) == r.time[j]);
    CHECK(p.features(j, 105) == (r.time[j] > te ? 1.0 : 0.0));
    CHECK(p.targets(j, 0) == r.rf[j]);
    CHECK(p.targets(j, 3) == r.else_[j]);
  }
  CHECK(p.features(0, 105) == 0.0);
  CHECK(p.features(kOutputSteps - 1, 105) == 1.0);
  CHECK(p.features(kOutputSteps - 1, 103) == 0.15);

  CHECK_THROWS_AS(build_features(r, std::vector<double>(99), m), ContractViolation);
}

TEST_CASE("augmentation") {
  const MaterialConfig m;
  const SimRecord src = simulate(parse_key("10330021"), 0.5, 2e3, 0.2, m);

  SUBCASE("identity at the full strain") {
    const SimRecord same = augment_one(src, 0.2);
    CHECK(same.strain == src.strain);
    CHECK(same.rf == src.rf);
    CHECK(same.pd == src.pd);
    CHECK(same.else_ == src.else_);
  }
  SUBCASE("bounds") {
    CHECK_THROWS_AS(augment_one(src, 0.0), ContractViolation);
    CHECK_THROWS_AS(augment_one(src, 0.21), ContractViolation);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(augment(src, rng, -1), ContractViolation);
  }
  SUBCASE("linear interpolation between source nodes") {
    const SimRecord half = augment_one(src, 0.1);
    for (int j = 0; j < kOutputSteps; ++j) {
      const double s = half.strain[j];
      std::size_t k = 0;
      while (k + 1 < src.strain.size() && src.strain[k + 1] <= s) ++k;
      const double w = k + 1 < src.strain.size() ? (s - src.strain[k]) / (src.strain[k + 1] - src.strain[k]) : 0.0;
      const double expect = k + 1 < src.strain.size() ? src.rf[k] + w * (src.rf[k + 1] - src.rf[k]) : src.rf[k];
      CHECK(half.rf[j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("monotone energies survive a thousand draws") {
    std::mt19937_64 rng(5);
    const auto many = augment(src, rng, 1000);
    REQUIRE(many.size() == 1000);
    for (const auto& a : many) {
      CHECK(a.final_strain >= kAugmentMin);
      CHECK(a.final_strain <= kAugmentMax);
      CHECK(a.strain.back() == a.final_strain);
      for (int j = 1; j < kOutputSteps; ++j) {
        REQUIRE(a.strain[j] > a.strain[j - 1]);
        REQUIRE(a.time[j] > a.time[j - 1]);
        REQUIRE(a.pd[j] >= a.pd[j - 1]);
        REQUIRE(a.dmd[j] >= a.dmd[j - 1]);
      }
    }
  }
}

TEST_CASE("split counts and hold-out isolation") {
  std::vector<std::string> labels;
  for (int k = 0; k < 660; ++k)
    for (int r = 0; r < 12; ++r) labels.push_back("k" + std::to_string(k));
  std::vector<std::string> uniq;
  for (int k = 0; k < 660; ++k) uniq.push_back("k" + std::to_string(k));

  SplitSpec spec;
  spec.heldout = choose_heldout(uniq, 60, 17);
  spec.seed = 4;
  const Split s = split_dataset(labels, spec);
  CHECK(s.test2.size() == 720);
  CHECK(static_cast<double>(s.test2.size()) / labels.size() == doctest::Approx(0.0909).epsilon(1e-3));
  const std::size_t seen = labels.size() - 720;
  CHECK(s.train.size() == static_cast<std::size_t>(std::llround(0.68 * seen)));
  CHECK(s.val.size() == static_cast<std::size_t>(std::llround(0.12 * seen)));
  CHECK(s.train.size() + s.val.size() + s.test1.size() == seen);

  const std::set<std::string> held(spec.heldout.begin(), spec.heldout.end());
  for (auto i : s.test2) CHECK(held.count(labels[i]) == 1);
  for (const auto* part : {&s.train, &s.val, &s.test1})
    for (auto i : *part) REQUIRE(held.count(labels[i]) == 0);

  std::vector<int> owner(labels.size(), 0);
  for (const auto* part : {&s.train, &s.val, &s.test1, &s.test2})
    for (auto i : *part) ++owner[i];
  CHECK(std::all_of(owner.begin(), owner.end(), [](int c) { return c == 1; }));

  const Split again = split_dataset(labels, spec);
  CHECK(again.train == s.train);
  CHECK(again.test1 == s.test1);

  SplitSpec bad = spec;
  bad.val_frac = 0.2;
  CHECK_THROWS_AS(split_dataset(labels, bad), ContractViolation);
  CHECK_THROWS_AS(choose_heldout(uniq, 661, 1), ContractViolation);
}

TEST_CASE("split csv round-trip") {
  Split s;
  s.train = {4, 0, 7};
  s.val = {2};
  s.test2 = {1, 3};
  std::ostringstream out;
  write_split_csv(out, s);
  CHECK(out.str().rfind("index,partition\n", 0) == 0);
  std::istringstream in(out.str());
  const Split back = read_split_csv(in);
  CHECK(back.train == s.train);
  CHECK(back.val == s.val);
  CHECK(back.test1.empty());
  CHECK(back.test2 == s.test2);

  std::istringstream unknown("index,partition\n3,holdout\n");
  CHECK_THROWS_AS(read_split_csv(unknown), FormatError);
  std::istringstream garbled("index,partition\nx,train\n");
  CHECK_THROWS_AS(read_split_csv(garbled), FormatError);
}

TEST_CASE("dataset generation is deterministic and thread independent") {
  const Dataset a = small_dataset(6, 3, 21);
  CHECK(a.size() == 18);
  std::vector<DesignKey> parsed;
  for (const char* s : {"00220000", "00231121", "10330021", "21441121"}) parsed.push_back(parse_key(s));
  const auto src = key_sources(parsed);
  GenerateConfig cfg;
  cfg.n_sims = 6;
  cfg.augment_k = 3;
  cfg.seed = 21;
  cfg.threads = 3;
  const Dataset b = generate_dataset(src, random_latents(src, 99), cfg, MaterialConfig{});
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.records[i] == b.records[i]);
  CHECK(a.sim_ids == b.sim_ids);
  for (const auto& r : a.records) {
    CHECK(r.thickness_mm >= 0.25);
    CHECK(r.thickness_mm <= 0.75);
    CHECK(r.final_strain >= kAugmentMin);
    CHECK(r.final_strain <= kAugmentMax);
  }
}

TEST_CASE("dataset binary round-trip and layout guard") {
  const Dataset d = small_dataset(3, 2, 8);
  std::ostringstream first;
  write_dataset(first, d);
  std::istringstream in(first.str());
  const Dataset back = read_dataset(in);
  std::ostringstream second;
  write_dataset(second, back);
  CHECK(first.str() == second.str());
  CHECK(back.point(1).features == d.point(1).features);

  Dataset future = d;
  future.layout_version = kFeatureLayoutVersion + 1;
  std::ostringstream fo;
  write_dataset(fo, future);
  std::istringstream fi(fo.str());
  CHECK_THROWS_AS(read_dataset(fi), FormatError);

  std::istringstream cut(first.str().substr(0, first.str().size() / 2));
  CHECK_THROWS(read_dataset(cut));
}

TEST_CASE("subset and append") {
  const Dataset d = small_dataset(4, 2, 9);
  const std::vector<std::size_t> pick = {5, 1};
  const Dataset s = d.subset(pick);
  CHECK(s.size() == 2);
  CHECK(s.records[0] == d.records[5]);
  CHECK(s.sim_ids[1] == d.sim_ids[1]);
  Dataset both = d;
  both.append(s, 100);
  CHECK(both.size() == d.size() + 2);
  CHECK(both.sim_ids.back() == d.sim_ids[1] + 100);

  Dataset clash = s;
  clash.latents.begin()->second[0] += 1.0;
  CHECK_THROWS_AS(both.append(clash, 0), ContractViolation);
}

TEST_CASE("scalers see only the training points") {
  Dataset d = small_dataset(6, 2, 10);
  const auto [train, rest] = split_by_simulation(d, 0.5, 1);
  REQUIRE(!train.empty());
  REQUIRE(!rest.empty());
  const auto [xs, ys] = fit_scalers(d, train);

  nn::MomentAccumulator ax(kFeatureCols), ay(kTargetCols);
  for (auto i : train) {
    const TrainingPoint p = d.point(i);
    ax.add_rows(p.features);
    ay.add_rows(p.targets);
  }
  const auto ex = ax.finish(), ey = ay.finish();
  for (int c = 0; c < kFeatureCols; ++c) CHECK(xs.mean[c] == doctest::Approx(ex.mean[c]).epsilon(1e-12));
  for (int c = 0; c < kTargetCols; ++c) CHECK(ys.std[c] == doctest::Approx(ey.std[c]).epsilon(1e-12));

  // Perturbing held-back points leaves the scalers alone.
  for (auto i : rest) {
    for (auto& v : d.records[i].rf) v *= 10.0;
    d.records[i].thickness_mm = 0.7;
  }
  const auto [xs2, ys2] = fit_scalers(d, train);
  CHECK(xs2.mean == xs.mean);
  CHECK(ys2.std == ys.std);

  // No simulation straddles the two sides.
  std::set<std::uint64_t> a, b;
  for (auto i : train) a.insert(d.sim_ids[i]);
  for (auto i : rest) b.insert(d.sim_ids[i]);
  for (auto id : a) CHECK(b.count(id) == 0);
}

TEST_CASE("relative mae") {
  nn::Matrix truth(4, 4), pred(4, 4);
  truth.setZero();
  truth.col(0) << 0.0, 0.05, 0.1, 0.02;  // range 0.1 N, below the floor
  pred = truth;
  pred.col(0).array() += 0.05;
  CHECK(relative_mae(truth, pred, 0, kForceFloorN) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(relative_mae(truth, truth, 0, kForceFloorN) == 0.0);

  truth.col(1) << 0.0, 10.0, 20.0, 40.0;
  pred.col(1) << 1.0, 9.0, 22.0, 40.0;
  CHECK(relative_mae(truth, pred, 1, kEnergyFloorJ) == doctest::Approx(1.0 / 40.0).epsilon(1e-12));
  // Invariant to a common scale when the range clears the floor.
  CHECK(relative_mae(truth * 7.0, pred * 7.0, 1, kEnergyFloorJ) ==
        doctest::Approx(relative_mae(truth, pred, 1, kEnergyFloorJ)).epsilon(1e-12));

  CHECK(default_floors()[0] == kForceFloorN);
  CHECK(default_floors()[3] == kEnergyFloorJ);
  CHECK_THROWS_AS(relative_mae(truth, nn::Matrix(3, 4), 0, 1.0), ContractViolation);
}

TEST_CASE("scores, summaries and percentile cases") {
  const Dataset d = small_dataset(3, 2, 12);
  const auto pts = iota(d.size());
  std::vector<nn::Matrix> exact, off;
  for (auto i : pts) {
    exact.push_back(d.point(i).targets);
    off.push_back(d.point(i).targets.array() + 1.0);
  }
  const SetScores zero = score_set("test1", d, pts, exact);
  for (double v : zero.mean()) CHECK(v == 0.0);

  const SetScores s = score_set("test1", d, pts, off);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const nn::Matrix t = d.point(pts[k]).targets;
    for (int c = 0; c < kTargetCols; ++c) {
      const double range = t.col(c).maxCoeff() - t.col(c).minCoeff();
      CHECK(s.points[k].rmae[c] == doctest::Approx(1.0 / std::max(range, default_floors()[c])).epsilon(1e-12));
    }
  }

  const EvalReport one = summarize({{s}});
  CHECK(one.set("test1").repetitions == 1);
  CHECK(one.set("test1").std_reps[0] == 0.0);
  CHECK(one.set("test1").mean[2] == doctest::Approx(s.mean()[2]));
  const EvalReport two = summarize({{zero}, {s}});
  CHECK(two.set("test1").mean[0] == doctest::Approx(s.mean()[0] / 2));
  CHECK(two.set("test1").std_reps[0] == doctest::Approx(s.mean()[0] / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS(two.set("nope"));

  std::ostringstream csv;
  write_report_csv(csv, two);
  CHECK(csv.str().rfind("set,output,n_points,repetitions,rmae_mean,rmae_std_reps,rmae_std_points", 0) == 0);

  const auto cases = percentile_cases(s);
  CHECK(cases.size() == 16);
  for (const auto& c : cases) {
    CHECK(c.rmae == s.points[c.slot].rmae[c.output]);
    if (c.percentile == 100) {
      double worst = 0.0;
      for (const auto& p : s.points) worst = std::max(worst, p.rmae[c.output]);
      CHECK(c.rmae == worst);
    }
  }
}

TEST_CASE("regressor prediction, frozen training and persistence") {
  const Dataset d = small_dataset(4, 3, 13);
  const auto pts = iota(d.size());
  GruResult r = train_gru(d, pts, {}, tiny_gru(1));
  REQUIRE(r.trace.size() == 1);
  CHECK(std::isnan(r.trace[0].val_loss));

  const nn::Matrix f = d.point(0).features;
  const nn::Matrix p = predict(r.regressor, f);
  CHECK(p.rows() == kOutputSteps);
  CHECK(p.cols() == kTargetCols);
  CHECK(predict(r.regressor, f) == p);

  GruTrainConfig frozen = tiny_gru(2);
  frozen.lr0 = 0.0;
  Regressor copy = r.regressor;
  continue_training(copy, d, pts, pts, frozen, r.trace);
  CHECK(predict(copy, f) == p);
  CHECK(r.trace.size() == 3);

  const nn::WeightArchive a = regressor_archive(r.regressor);
  const Regressor loaded = regressor_from_archive(a);
  CHECK(predict(loaded, f) == p);

  Regressor stale = r.regressor;
  stale.layout_version = kFeatureLayoutVersion + 1;
  CHECK_THROWS_AS(predict(stale, f), FormatError);
  nn::WeightArchive sa = regressor_archive(stale);
  CHECK_THROWS_AS(regressor_from_archive(sa), FormatError);

  std::ostringstream trace;
  write_trace_csv(trace, r.trace);
  CHECK(trace.str().rfind("epoch,train_loss,val_loss,train_mse,val_mse\n", 0) == 0);
}

TEST_CASE("a tiny model can overfit ten points") {
  const Dataset d = small_dataset(5, 2, 14);
  const auto pts = iota(10);
  GruTrainConfig cfg = tiny_gru(200);
  cfg.hidden = {32, 32};
  cfg.batch = 2;
  cfg.decay = 0.05;
  cfg.lr0 = 1e-2;
  const GruResult r = train_gru(d, pts, pts, cfg);
  // Scaled MAE over the same ten points after training.
  CHECK(r.trace.back().val_loss < 0.05);
  CHECK(r.trace.back().train_loss < r.trace.front().train_loss);
}

TEST_CASE("transfer with zero epochs keeps the base model") {
  const Dataset base = small_dataset(4, 2, 15);
  const Dataset fresh = small_dataset(2, 2, 16, {"11341121", "20220000"});
  const auto base_pts = iota(base.size());
  const GruResult r = train_gru(base, base_pts, {}, tiny_gru(1));
  TransferConfig cfg;
  cfg.epochs = 0;
  cfg.replay = 3;
  cfg.batch = 4;
  const auto new_pts = iota(fresh.size());
  const TransferResult t = transfer_train(r.regressor, base, base_pts, {0, 1}, fresh, new_pts, new_pts, cfg);
  CHECK(t.replay_points.size() == 3);
  const nn::Matrix f = fresh.point(0).features;
  CHECK(predict(t.regressor, f) == predict(r.regressor, f));
  CHECK(t.before.set("new").mean == t.after.set("new").mean);
  CHECK(t.before.set("test2").mean == t.after.set("test2").mean);

  std::set<std::size_t> uniq(t.replay_points.begin(), t.replay_points.end());
  CHECK(uniq.size() == t.replay_points.size());

  CHECK_THROWS_AS(transfer_train(r.regressor, base, base_pts, {0}, fresh, {}, new_pts, cfg), ContractViolation);
}

TEST_CASE("an untrained autoencoder reconstructs poorly") {
  nn::Autoencoder ae(kImagePixels, kLatentDim);
  std::mt19937_64 rng(1);
  ae.init(rng);
  std::vector<BitImage> imgs;
  for (const char* k : {"00220000", "00231121", "21441121"}) imgs.push_back(render_key(parse_key(k)));
  std::vector<const BitImage*> ptrs;
  for (const auto& im : imgs) ptrs.push_back(&im);
  CHECK(mean_dsc(ae, ptrs) < 0.2);
  const auto z = encode_images(ae, imgs);
  CHECK(z.size() == 3);
  CHECK(z.at("00231121").size() == static_cast<std::size_t>(kLatentDim));
}

#include "lattice/pipeline/transfer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "lattice/error.hpp"

namespace lattice::pipeline {

EvalReport transfer_report(const Regressor& reg, const Dataset& base_data,
                           const std::vector<std::size_t>& base_test2, const Dataset& new_data,
                           const std::vector<std::size_t>& new_test) {
  std::vector<SetScores> run;
  run.push_back(score_set("test2", base_data, base_test2, predict_points(reg, base_data, base_test2)));
  run.push_back(score_set("new", new_data, new_test, predict_points(reg, new_data, new_test)));
  return summarize({run});
}

TransferResult transfer_train(const Regressor& base, const Dataset& base_data,
                              const std::vector<std::size_t>& base_train,
                              const std::vector<std::size_t>& base_test2, const Dataset& new_data,
                              const std::vector<std::size_t>& new_train,
                              const std::vector<std::size_t>& new_test, const TransferConfig& cfg) {
  if (new_train.empty()) throw ContractViolation("transfer: no new-geometry training points");
  if (!(base_data.material == new_data.material)) {
    throw ContractViolation("transfer: base and new datasets use different materials");
  }

  TransferResult result;
  result.regressor = base;
  result.before = transfer_report(base, base_data, base_test2, new_data, new_test);

  std::vector<std::size_t> pool = base_train;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0x7e91u};
  std::mt19937_64 rng(seq);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(cfg.replay, pool.size()));
  std::sort(pool.begin(), pool.end());
  result.replay_points = pool;

  // Mixed set: replayed originals, then new training points, then the new
  // holdout (monitored as validation only).
  Dataset mixed = base_data.subset(pool);
  std::uint64_t offset = 0;
  for (auto id : mixed.sim_ids) offset = std::max(offset, id + 1);
  mixed.append(new_data.subset(new_train), offset);
  const std::size_t n_train = mixed.size();
  mixed.append(new_data.subset(new_test), offset);

  std::vector<std::size_t> train(n_train), val(mixed.size() - n_train);
  std::iota(train.begin(), train.end(), std::size_t{0});
  std::iota(val.begin(), val.end(), n_train);

  GruTrainConfig gcfg;
  gcfg.epochs = cfg.epochs;
  gcfg.batch = cfg.batch;
  gcfg.lr0 = cfg.lr0;
  gcfg.decay = cfg.decay;
  gcfg.seed = cfg.seed;
  gcfg.on_epoch = cfg.on_epoch;
  continue_training(result.regressor, mixed, train, val, gcfg, result.trace);

  result.after = transfer_report(result.regressor, base_data, base_test2, new_data, new_test);
  return result;
}

}  // namespace lattice::pipeline

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lattice/pipeline/evaluate.hpp"
#include "lattice/pipeline/gru_training.hpp"

namespace lattice::pipeline {

struct TransferConfig {
  int epochs = 20;
  std::size_t replay = 5000;
  int batch = 600;
  double lr0 = 1e-3;
  double decay = 0.1;
  std::uint64_t seed = 0;
  std::function<void(const EpochTrace&)> on_epoch;
};

struct TransferResult {
  Regressor regressor;
  std::vector<EpochTrace> trace;
  std::vector<std::size_t> replay_points;  // indices into the base dataset
  // Sets "test2" (original unseen keys) and "new" (new-geometry holdout).
  EvalReport before;
  EvalReport after;
};

/// Continues training `base` on the new-geometry training points mixed with
/// `replay` points drawn uniformly without replacement from `base_train`.
/// The base scalers are kept. Throws ContractViolation if `new_train` is empty.
TransferResult transfer_train(const Regressor& base, const Dataset& base_data,
                              const std::vector<std::size_t>& base_train,
                              const std::vector<std::size_t>& base_test2, const Dataset& new_data,
                              const std::vector<std::size_t>& new_train,
                              const std::vector<std::size_t>& new_test, const TransferConfig& config);

/// Scores `reg` on the two transfer evaluation sets.
EvalReport transfer_report(const Regressor& reg, const Dataset& base_data,
                           const std::vector<std::size_t>& base_test2, const Dataset& new_data,
                           const std::vector<std::size_t>& new_test);

}  // namespace lattice::pipeline

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "covnmt/adadelta.hpp"
#include "covnmt/objective.hpp"
#include "covnmt/params.hpp"

namespace covnmt {

struct TrainConfig {
  ObjectiveConfig objective;
  std::size_t batch = 80;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  AdaDeltaConfig optimizer;
  // Batches are formed by sorting pools of batch * bucket_pool shuffled
  // sentences by source length.
  std::size_t bucket_pool = 8;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double dev_loss = 0;
  double dev_acc = 0;
  double cov_l1 = 0;  // mean final coverage L1 per real source position, summed over rules
};

struct EvalSummary {
  double loss = 0;
  double accuracy = 0;
  double cov_l1 = 0;
};

// Teacher-forced objective, token accuracy and final coverage norm over a set
// of examples; no parameters are touched.
template <typename T>
EvalSummary evaluate(const ModelParams<T>& params, std::span<const TrainingExample> examples,
                     const ObjectiveConfig& objective);

// Index batches for one epoch: shuffled, length-bucketed, deterministic in
// (seed, epoch).
std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainingExample> examples, std::size_t batch,
                                                   std::size_t bucket_pool, std::uint64_t seed,
                                                   std::size_t epoch);

template <typename T>
class Trainer {
 public:
  Trainer(ModelParams<T>& params, TrainConfig config);

  // One pass over train with mean-per-sentence batch objectives; dev metrics
  // are computed after the pass.
  EpochMetrics run_epoch(std::span<const TrainingExample> train, std::span<const TrainingExample> dev);

  std::size_t epochs_done() const { return epoch_; }
  std::size_t skipped_updates() const { return skipped_; }
  const AdaDelta<T>& optimizer() const { return optimizer_; }

 private:
  ModelParams<T>& params_;
  TrainConfig config_;
  AdaDelta<T> optimizer_;
  std::vector<NamedParam<T>> named_;
  std::size_t epoch_ = 0;
  std::size_t skipped_ = 0;
};

template <typename T>
std::vector<EpochMetrics> train(ModelParams<T>& params, const TrainConfig& config,
                                std::span<const TrainingExample> train_set,
                                std::span<const TrainingExample> dev_set,
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

// "epoch\ttrain_loss\tdev_loss\tdev_acc\tcov_l1" with fixed formatting.
std::string format_metrics(const EpochMetrics& m);

}  // namespace covnmt

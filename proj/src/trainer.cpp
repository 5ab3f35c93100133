#include "covnmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "covnmt/random.hpp"

namespace covnmt {

namespace {

void check_examples(std::span<const TrainingExample> examples, const ObjectiveConfig& objective) {
  for (std::size_t n = 0; n < examples.size(); ++n) {
    if (examples[n].source.empty()) throw DataError("example " + std::to_string(n) + " has an empty source");
    if (objective.kind == ObjectiveKind::aligned && !examples[n].links)
      throw DataError("example " + std::to_string(n) + " has no alignment links for the aligned objective");
  }
}

}  // namespace

template <typename T>
EvalSummary evaluate(const ModelParams<T>& params, std::span<const TrainingExample> examples,
                     const ObjectiveConfig& objective) {
  EvalSummary out;
  if (examples.empty()) return out;
  double loss = 0, l1 = 0;
  std::size_t correct = 0, steps = 0, positions = 0;
  for (const auto& ex : examples) {
    Tape<T> tape(Tape<T>::Recording::disabled);
    const auto run = run_sentence(tape, params, ex, objective);
    loss += static_cast<double>(run.total.item());
    correct += run.correct;
    steps += run.steps;
    const auto& final_states = run.coverage.back();
    const Mask& mask = final_states.empty() ? Mask{} : final_states.front().mask;
    for (std::size_t i = 0; i < mask.size(); ++i) positions += mask[i] != 0;
    for (const auto& s : final_states) {
      const auto norms = row_l1(s);
      for (std::size_t i = 0; i < norms.size(); ++i)
        if (s.mask[i]) l1 += norms[i];
    }
  }
  out.loss = loss / static_cast<double>(examples.size());
  out.accuracy = steps ? static_cast<double>(correct) / static_cast<double>(steps) : 0.0;
  out.cov_l1 = positions ? l1 / static_cast<double>(positions) : 0.0;
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainingExample> examples, std::size_t batch,
                                                   std::size_t bucket_pool, std::uint64_t seed,
                                                   std::size_t epoch) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  Rng rng(seed * 1000003ULL + epoch);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());

  const std::size_t pool = batch * std::max<std::size_t>(bucket_pool, 1);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += pool) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + pool));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return examples[a].source.size() < examples[b].source.size();
    });
    for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(std::min<std::size_t>(batch, last - it)))
      batches.emplace_back(it, it + static_cast<std::ptrdiff_t>(std::min<std::size_t>(batch, last - it)));
  }
  rng.shuffle(batches.begin(), batches.end());
  return batches;
}

template <typename T>
Trainer<T>::Trainer(ModelParams<T>& params, TrainConfig config)
    : params_(params), config_(config), optimizer_(config.optimizer), named_(params.named()) {
  validate(config_.objective.lambdas);
  if (config_.batch == 0) throw ConfigError("batch size must be positive");
}

template <typename T>
EpochMetrics Trainer<T>::run_epoch(std::span<const TrainingExample> train_set,
                                   std::span<const TrainingExample> dev_set) {
  if (train_set.empty()) throw EmptyInputError("training corpus is empty");
  check_examples(train_set, config_.objective);
  check_examples(dev_set, config_.objective);

  const auto batches = make_batches(train_set, config_.batch, config_.bucket_pool, config_.seed, epoch_);
  double loss_sum = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& batch = batches[b];
    params_.zero_grad();
    const T inv = T(1) / static_cast<T>(batch.size());
    for (std::size_t idx : batch) {
      Tape<T> tape;
      auto run = run_sentence(tape, params_, train_set[idx], config_.objective);
      const double value = static_cast<double>(run.total.item());
      if (!std::isfinite(value))
        throw NumericError("training diverged: epoch " + std::to_string(epoch_ + 1) + ", batch " +
                           std::to_string(b) + ", example " + std::to_string(idx) + " has loss " +
                           std::to_string(value));
      if (run.guarded_logs)
        std::cerr << "warning: example " << idx << " assigned (near) zero probability to a reference token\n";
      loss_sum += value;
      tape.backward(tape.scale(run.total, inv));
    }
    if (!optimizer_.step(named_)) {
      ++skipped_;
      std::cerr << "warning: non-finite gradient in epoch " << epoch_ + 1 << ", batch " << b
                << "; update skipped\n";
    }
  }
  params_.zero_grad();
  ++epoch_;

  EpochMetrics m;
  m.epoch = epoch_;
  m.train_loss = loss_sum / static_cast<double>(train_set.size());
  const auto dev = evaluate(params_, dev_set, config_.objective);
  m.dev_loss = dev.loss;
  m.dev_acc = dev.accuracy;
  m.cov_l1 = dev.cov_l1;
  return m;
}

template <typename T>
std::vector<EpochMetrics> train(ModelParams<T>& params, const TrainConfig& config,
                                std::span<const TrainingExample> train_set,
                                std::span<const TrainingExample> dev_set,
                                const std::function<void(const EpochMetrics&)>& on_epoch) {
  Trainer<T> trainer(params, config);
  std::vector<EpochMetrics> log;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    log.push_back(trainer.run_epoch(train_set, dev_set));
    if (on_epoch) on_epoch(log.back());
  }
  return log;
}

std::string format_metrics(const EpochMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%.6f\t%.6f", m.epoch, m.train_loss, m.dev_loss, m.dev_acc,
                m.cov_l1);
  return buf;
}

#define COVNMT_INSTANTIATE(T)                                                                                \
  template EvalSummary evaluate(const ModelParams<T>&, std::span<const TrainingExample>,                     \
                                const ObjectiveConfig&);                                                     \
  template class Trainer<T>;                                                                                 \
  template std::vector<EpochMetrics> train(ModelParams<T>&, const TrainConfig&,                              \
                                           std::span<const TrainingExample>,                                 \
                                           std::span<const TrainingExample>,                                 \
                                           const std::function<void(const EpochMetrics&)>&);

COVNMT_INSTANTIATE(float)
COVNMT_INSTANTIATE(double)

#undef COVNMT_INSTANTIATE

}  // namespace covnmt

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitnet/data.hpp"
#include "gaitnet/models.hpp"

namespace gaitnet {

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;

  // Throws InvalidConfig naming the first violated constraint.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);

  bool operator==(const TrainConfig&) const = default;
};

// First and second moments per parameter, in model parameter order.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const std::vector<NamedParameter<T>>& params);
};

// One synchronous Adam update of every parameter from its accumulated
// gradient. Throws ContractError when a parameter has no gradient.
template <typename T>
void adam_step(std::vector<NamedParameter<T>>& params, AdamState<T>& state, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean per-sample BCE over the epoch
  double accuracy = 0.0;  // fraction of train samples classified correctly

  bool operator==(const EpochRecord&) const = default;
};

using TrainHistory = std::vector<EpochRecord>;

// Everything needed to continue a run exactly where it stopped.
template <typename T>
struct TrainState {
  Model<T> model;
  AdamState<T> adam;
  std::size_t epoch = 0;  // completed epochs
  TrainHistory history;
  Rng dropout_rng;

  // Fresh state: zero moments, dropout stream derived from config.seed.
  static TrainState start(Model<T> model, const TrainConfig& config);
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Batch order for one epoch: identity or a permutation seeded by
// (config.seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t count, const TrainConfig& config, std::size_t epoch);

// Runs epochs state.epoch+1 .. config.epochs. Every batch: forward in train
// mode, BCE, backward, Adam step, zero grads. Throws NumericError naming the
// epoch, batch and sample ids when the loss is not finite.
template <typename T>
const TrainHistory& train(TrainState<T>& state, const std::vector<VideoSample>& samples, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

std::string format_history(const TrainHistory& history);
nlohmann::json history_to_json(const TrainHistory& history);
TrainHistory history_from_json(const nlohmann::json& j);

}  // namespace gaitnet

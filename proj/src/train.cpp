#include "gaitnet/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gaitnet/errors.hpp"
#include "gaitnet/nn.hpp"

namespace gaitnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidConfig("train: batch size must be >= 1");
  if (epochs < 1) throw InvalidConfig("train: epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidConfig("train: learning rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidConfig("train: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidConfig("train: beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidConfig("train: epsilon must be > 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size}, {"epochs", epochs}, {"learning_rate", learning_rate},
          {"beta1", beta1},           {"beta2", beta2},   {"epsilon", epsilon},
          {"seed", seed},             {"shuffle", shuffle}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    read("batch_size", c.batch_size);
    read("epochs", c.epochs);
    read("learning_rate", c.learning_rate);
    read("beta1", c.beta1);
    read("beta2", c.beta2);
    read("epsilon", c.epsilon);
    read("seed", c.seed);
    read("shuffle", c.shuffle);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("train config: ") + e.what());
  }
  return c;
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const std::vector<NamedParameter<T>>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.numel(), T(0));
    s.v.emplace_back(p.value.numel(), T(0));
  }
  return s;
}

template <typename T>
void adam_step(std::vector<NamedParameter<T>>& params, AdamState<T>& state, const TrainConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ContractError("adam_step: optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value.has_grad()) throw ContractError("adam_step: parameter '" + params[i].name + "' has no gradient");
    if (state.m[i].size() != params[i].value.numel())
      throw ContractError("adam_step: moment size differs for '" + params[i].name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T c1 = static_cast<T>(1.0 - std::pow(config.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(config.beta2, t));
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T lr = static_cast<T>(config.learning_rate), eps = static_cast<T>(config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.mutable_data();
    auto g = params[i].value.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const T m_hat = m[k] / c1;
      const T v_hat = v[k] / c2;
      theta[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
TrainState<T> TrainState<T>::start(Model<T> model, const TrainConfig& config) {
  auto adam = AdamState<T>::zeros_like(model.parameters());
  return TrainState{std::move(model), std::move(adam), 0, {}, Rng(derive_seed(config.seed, "dropout"))};
}

std::vector<std::size_t> epoch_order(std::size_t count, const TrainConfig& config, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!config.shuffle || count < 2) return order;
  Rng rng(derive_seed(derive_seed(config.seed, "shuffle"), epoch));
  for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  return order;
}

template <typename T>
const TrainHistory& train(TrainState<T>& state, const std::vector<VideoSample>& samples, const TrainConfig& config,
                          const EpochCallback& on_epoch) {
  config.validate();
  if (samples.empty()) throw InvalidInput("train: no training samples");
  const Shape want = [&] {
    Shape s = state.model.config().input_shape(1);
    s.erase(s.begin());
    return s;
  }();
  for (const auto& s : samples)
    if (s.frames.shape() != want)
      throw ShapeMismatch("train: sample '" + s.id + "' has shape " + to_string(s.frames.shape()) +
                          ", model expects " + to_string(want));

  auto& params = state.model.parameters();
  for (auto& p : params) p.value.set_requires_grad(true);
  state.model.set_mode(Mode::kTrain);

  for (std::size_t epoch = state.epoch + 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(samples.size(), config, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch_no = 1; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(
                                                             std::min(order.size(), start + config.batch_size)));
      auto [x, y] = make_batch<T>(samples, idx);
      Tape tape;
      Tape::Scope scope(tape);
      const auto pred = forward(state.model, x, Mode::kTrain, state.dropout_rng);
      const auto loss = bce_loss(pred, y);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) {
        std::string ids;
        for (auto i : idx) ids += (ids.empty() ? "" : ", ") + samples[i].id;
        throw NumericError("train: non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + " (samples " + ids + ")");
      }
      tape.backward(loss);
      adam_step(params, state.adam, config);
      for (auto& p : params) p.value.clear_grad();

      loss_sum += value * static_cast<double>(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b)
        correct += (pred.data()[b] >= T(0.5)) == (y.data()[b] >= T(0.5));
    }
    const double n = static_cast<double>(samples.size());
    state.history.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
    state.epoch = epoch;
    if (on_epoch) on_epoch(state.history.back());
  }
  state.model.set_mode(Mode::kInfer);
  return state.history;
}

std::string format_history(const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch        loss  accuracy\n";
  char line[64];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%5zu  %10.6f  %8.4f\n", r.epoch, r.loss, r.accuracy);
    out << line;
  }
  return out.str();
}

nlohmann::json history_to_json(const TrainHistory& history) {
  auto j = nlohmann::json::array();
  for (const auto& r : history) j.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"accuracy", r.accuracy}});
  return j;
}

TrainHistory history_from_json(const nlohmann::json& j) {
  TrainHistory h;
  try {
    for (const auto& r : j)
      h.push_back({r.at("epoch").get<std::size_t>(), r.at("loss").get<double>(), r.at("accuracy").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("history: ") + e.what(), 0);
  }
  return h;
}

#define GAITNET_INSTANTIATE(T)                                                                         \
  template struct AdamState<T>;                                                                        \
  template struct TrainState<T>;                                                                       \
  template void adam_step(std::vector<NamedParameter<T>>&, AdamState<T>&, const TrainConfig&);         \
  template const TrainHistory& train(TrainState<T>&, const std::vector<VideoSample>&, const TrainConfig&, \
                                     const EpochCallback&);

GAITNET_INSTANTIATE(float)
GAITNET_INSTANTIATE(double)

#undef GAITNET_INSTANTIATE

}  // namespace gaitnet

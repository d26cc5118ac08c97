#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitnet/nn.hpp"
#include "gaitnet/tensor.hpp"

namespace gaitnet {

enum class Variant { kCnn3d, kConvLstm2d };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& name);

enum class Mode { kTrain, kInfer };

// Architecture description. Defaults reproduce the full-size networks; every
// extent is configurable so scaled-down variants can run on a desk machine.
struct ModelConfig {
  Variant variant = Variant::kCnn3d;
  std::size_t frames = 25;
  std::size_t height = 224;
  std::size_t width = 224;
  std::size_t channels = 3;
  std::vector<std::size_t> conv_filters{32, 64};  // cnn3d only
  std::size_t conv_kernel = 3;
  std::size_t convlstm_filters = 32;  // convlstm2d only
  std::size_t convlstm_kernel = 3;
  std::vector<std::size_t> dense_units{128, 64};
  std::vector<double> dropout_rates{0.5, 0.5};

  static ModelConfig defaults(Variant variant);

  // Throws InvalidConfig naming the first violated constraint.
  void validate() const;

  Shape input_shape(std::size_t batch) const { return {batch, frames, height, width, channels}; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

struct LayerShape {
  std::string layer;
  Shape shape;  // without the batch axis
};

// Output shape of every layer, computed from the config alone.
std::vector<LayerShape> trace_shapes(const ModelConfig& config);

template <typename T>
struct NamedParameter {
  std::string name;
  BasicTensor<T> value;
};

template <typename T>
class Model {
 public:
  Model(ModelConfig config, std::vector<NamedParameter<T>> parameters);

  const ModelConfig& config() const { return config_; }
  std::vector<NamedParameter<T>>& parameters() { return parameters_; }
  const std::vector<NamedParameter<T>>& parameters() const { return parameters_; }

  // Throws InvalidArgument for an unknown name.
  const BasicTensor<T>& parameter(const std::string& name) const;
  BasicTensor<T>& parameter(const std::string& name);

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  void zero_grad();

 private:
  ModelConfig config_;
  std::vector<NamedParameter<T>> parameters_;
  Mode mode_ = Mode::kInfer;
};

// conv3d(same) -> relu -> maxpool(2,2,2) per conv filter count, flatten,
// dense -> relu -> dropout per dense width, dense(1) -> sigmoid.
template <typename T>
Model<T> build_cnn3d(const ModelConfig& config, Rng& rng);

// convlstm2d(same, full sequence) -> maxpool(1,2,2) -> maxpool(1,2,2),
// flatten, dense -> relu -> dropout per dense width, dense(1) -> sigmoid.
template <typename T>
Model<T> build_convlstm2d(const ModelConfig& config, Rng& rng);

template <typename T>
Model<T> build_model(const ModelConfig& config, Rng& rng);

// batch (N, T, H, W, C) -> probabilities (N, 1). Dropout draws from `rng`
// only in Mode::kTrain.
template <typename T>
BasicTensor<T> forward(const Model<T>& model, const BasicTensor<T>& batch, Mode mode, Rng& rng);

template <typename T>
std::size_t param_count(const Model<T>& model);

// Parameter total implied by a config, without allocating anything.
std::size_t param_count(const ModelConfig& config);

struct ParameterShape {
  std::string name;
  Shape shape;
};

// Names and shapes of the parameters a builder would create, in order.
std::vector<ParameterShape> parameter_layout(const ModelConfig& config);

}  // namespace gaitnet

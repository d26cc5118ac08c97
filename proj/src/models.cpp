#include "gaitnet/models.hpp"

#include <cmath>

namespace gaitnet {
namespace {

constexpr Pool3d kCnnPool{2, 2, 2};
constexpr Pool3d kLstmPool{1, 2, 2};
constexpr const char* kGateSuffix[4] = {"i", "f", "c", "o"};

enum class Init { kGlorot, kZero, kOne };

struct ParameterSpec {
  std::string name;
  Shape shape;
  Init init;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

std::size_t product(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

void append_head(const ModelConfig& c, std::size_t flat, std::vector<ParameterSpec>& specs) {
  std::size_t in = flat;
  for (std::size_t j = 0; j < c.dense_units.size(); ++j) {
    const std::size_t out = c.dense_units[j];
    const std::string prefix = "dense" + std::to_string(j + 1);
    specs.push_back({prefix + ".kernel", {in, out}, Init::kGlorot, in, out});
    specs.push_back({prefix + ".bias", {out}, Init::kZero});
    in = out;
  }
  specs.push_back({"output.kernel", {in, 1}, Init::kGlorot, in, 1});
  specs.push_back({"output.bias", {1}, Init::kZero});
}

std::vector<ParameterSpec> parameter_specs(const ModelConfig& c) {
  c.validate();
  const Shape flat_shape = trace_shapes(c).at(c.variant == Variant::kCnn3d
                                                   ? 3 * c.conv_filters.size()
                                                   : 3).shape;
  std::vector<ParameterSpec> specs;
  if (c.variant == Variant::kCnn3d) {
    std::size_t cin = c.channels;
    const std::size_t k = c.conv_kernel;
    for (std::size_t i = 0; i < c.conv_filters.size(); ++i) {
      const std::size_t f = c.conv_filters[i];
      const std::string prefix = "conv" + std::to_string(i + 1);
      specs.push_back({prefix + ".kernel", {k, k, k, cin, f}, Init::kGlorot, k * k * k * cin, k * k * k * f});
      specs.push_back({prefix + ".bias", {f}, Init::kZero});
      cin = f;
    }
  } else {
    const std::size_t k = c.convlstm_kernel, f = c.convlstm_filters;
    for (std::size_t g = 0; g < 4; ++g)
      specs.push_back({std::string("convlstm.input_kernel.") + kGateSuffix[g],
                       {k, k, c.channels, f}, Init::kGlorot, k * k * c.channels, k * k * f});
    for (std::size_t g = 0; g < 4; ++g)
      specs.push_back({std::string("convlstm.recurrent_kernel.") + kGateSuffix[g],
                       {k, k, f, f}, Init::kGlorot, k * k * f, k * k * f});
    for (std::size_t g = 0; g < 4; ++g)
      specs.push_back({std::string("convlstm.bias.") + kGateSuffix[g], {f},
                       g == kForgetGate ? Init::kOne : Init::kZero});
  }
  append_head(c, product(flat_shape), specs);
  return specs;
}

template <typename T>
Model<T> instantiate(const ModelConfig& config, Rng& rng) {
  std::vector<NamedParameter<T>> params;
  for (const auto& spec : parameter_specs(config)) {
    BasicTensor<T> value;
    switch (spec.init) {
      case Init::kZero:
        value = BasicTensor<T>::zeros(spec.shape);
        break;
      case Init::kOne:
        value = BasicTensor<T>::ones(spec.shape);
        break;
      case Init::kGlorot: {
        const double bound = std::sqrt(6.0 / static_cast<double>(spec.fan_in + spec.fan_out));
        value = BasicTensor<T>::create(spec.shape, Fill::uniform(-bound, bound), &rng);
        break;
      }
    }
    value.set_requires_grad(true);
    params.push_back({spec.name, std::move(value)});
  }
  return Model<T>(config, std::move(params));
}

template <typename T>
BasicTensor<T> head(const Model<T>& model, BasicTensor<T> x, Mode mode, Rng& rng) {
  const auto& c = model.config();
  for (std::size_t j = 0; j < c.dense_units.size(); ++j) {
    const std::string prefix = "dense" + std::to_string(j + 1);
    x = relu(dense(x, DenseParams<T>{model.parameter(prefix + ".kernel"), model.parameter(prefix + ".bias")}));
    x = dropout(x, c.dropout_rates[j], mode == Mode::kTrain, rng);
  }
  return sigmoid(dense(x, DenseParams<T>{model.parameter("output.kernel"), model.parameter("output.bias")}));
}

}  // namespace

std::string to_string(Variant variant) {
  return variant == Variant::kCnn3d ? "cnn3d" : "convlstm2d";
}

Variant parse_variant(const std::string& name) {
  if (name == "cnn3d") return Variant::kCnn3d;
  if (name == "convlstm2d") return Variant::kConvLstm2d;
  throw InvalidConfig("unknown model variant '" + name + "' (expected cnn3d or convlstm2d)");
}

ModelConfig ModelConfig::defaults(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  if (variant == Variant::kConvLstm2d) {
    c.conv_filters = {};
    c.dense_units = {128};
    c.dropout_rates = {0.25};
  }
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidConfig("model config: " + what); };
  if (frames == 0 || height == 0 || width == 0 || channels == 0) fail("input extents must be >= 1");
  if (dense_units.size() != dropout_rates.size())
    fail("dense_units and dropout_rates must have equal length");
  for (auto u : dense_units)
    if (u == 0) fail("dense units must be >= 1");
  for (double r : dropout_rates)
    if (!(r >= 0.0 && r < 1.0)) fail("dropout rates must lie in [0, 1)");
  if (variant == Variant::kCnn3d) {
    if (conv_filters.empty()) fail("cnn3d needs at least one conv layer");
    for (auto f : conv_filters)
      if (f == 0) fail("conv filters must be >= 1");
    if (conv_kernel == 0) fail("conv kernel must be >= 1");
    std::size_t t = frames, h = height, w = width;
    for (std::size_t i = 0; i < conv_filters.size(); ++i) {
      if (t < kCnnPool.t || h < kCnnPool.h || w < kCnnPool.w)
        fail("input " + to_string(Shape{frames, height, width}) + " too small for " +
             std::to_string(conv_filters.size()) + " (2,2,2) pools");
      t /= kCnnPool.t;
      h /= kCnnPool.h;
      w /= kCnnPool.w;
    }
  } else {
    if (convlstm_filters == 0) fail("convlstm filters must be >= 1");
    if (convlstm_kernel == 0) fail("convlstm kernel must be >= 1");
    if (height < 4 || width < 4) fail("convlstm2d needs height and width >= 4 for two (1,2,2) pools");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"variant", to_string(variant)},
          {"frames", frames},
          {"height", height},
          {"width", width},
          {"channels", channels},
          {"conv_filters", conv_filters},
          {"conv_kernel", conv_kernel},
          {"convlstm_filters", convlstm_filters},
          {"convlstm_kernel", convlstm_kernel},
          {"dense_units", dense_units},
          {"dropout_rates", dropout_rates}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c = defaults(parse_variant(j.at("variant").get<std::string>()));
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    read("frames", c.frames);
    read("height", c.height);
    read("width", c.width);
    read("channels", c.channels);
    read("conv_filters", c.conv_filters);
    read("conv_kernel", c.conv_kernel);
    read("convlstm_filters", c.convlstm_filters);
    read("convlstm_kernel", c.convlstm_kernel);
    read("dense_units", c.dense_units);
    read("dropout_rates", c.dropout_rates);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("model config: ") + e.what());
  }
}

std::vector<LayerShape> trace_shapes(const ModelConfig& c) {
  c.validate();
  std::vector<LayerShape> layers;
  Shape s{c.frames, c.height, c.width, c.channels};
  auto pool = [&s](Pool3d p) { s = {s[0] / p.t, s[1] / p.h, s[2] / p.w, s[3]}; };
  if (c.variant == Variant::kCnn3d) {
    for (std::size_t i = 0; i < c.conv_filters.size(); ++i) {
      const std::string n = std::to_string(i + 1);
      s[3] = c.conv_filters[i];
      layers.push_back({"conv" + n, s});
      layers.push_back({"relu" + n, s});
      pool(kCnnPool);
      layers.push_back({"pool" + n, s});
    }
  } else {
    s[3] = c.convlstm_filters;
    layers.push_back({"convlstm", s});
    pool(kLstmPool);
    layers.push_back({"pool1", s});
    pool(kLstmPool);
    layers.push_back({"pool2", s});
  }
  layers.push_back({"flatten", {product(s)}});
  for (std::size_t j = 0; j < c.dense_units.size(); ++j)
    layers.push_back({"dense" + std::to_string(j + 1), {c.dense_units[j]}});
  layers.push_back({"output", {1}});
  return layers;
}

template <typename T>
Model<T>::Model(ModelConfig config, std::vector<NamedParameter<T>> parameters)
    : config_(std::move(config)), parameters_(std::move(parameters)) {
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    for (std::size_t j = i + 1; j < parameters_.size(); ++j)
      if (parameters_[i].name == parameters_[j].name)
        throw InvalidConfig("duplicate parameter name '" + parameters_[i].name + "'");
}

template <typename T>
const BasicTensor<T>& Model<T>::parameter(const std::string& name) const {
  for (const auto& p : parameters_)
    if (p.name == name) return p.value;
  throw InvalidArgument("model has no parameter '" + name + "'");
}

template <typename T>
BasicTensor<T>& Model<T>::parameter(const std::string& name) {
  return const_cast<BasicTensor<T>&>(std::as_const(*this).parameter(name));
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : parameters_) p.value.zero_grad();
}

template <typename T>
Model<T> build_cnn3d(const ModelConfig& config, Rng& rng) {
  if (config.variant != Variant::kCnn3d) throw InvalidConfig("build_cnn3d: config variant is " + to_string(config.variant));
  return instantiate<T>(config, rng);
}

template <typename T>
Model<T> build_convlstm2d(const ModelConfig& config, Rng& rng) {
  if (config.variant != Variant::kConvLstm2d)
    throw InvalidConfig("build_convlstm2d: config variant is " + to_string(config.variant));
  return instantiate<T>(config, rng);
}

template <typename T>
Model<T> build_model(const ModelConfig& config, Rng& rng) {
  return config.variant == Variant::kCnn3d ? build_cnn3d<T>(config, rng) : build_convlstm2d<T>(config, rng);
}

template <typename T>
BasicTensor<T> forward(const Model<T>& model, const BasicTensor<T>& batch, Mode mode, Rng& rng) {
  const auto& c = model.config();
  if (batch.ndim() != 5 || batch.shape() != c.input_shape(batch.dim(0)))
    throw InvalidInput("forward: batch shape " + to_string(batch.shape()) + " does not match model input " +
                       to_string(c.input_shape(batch.ndim() > 0 ? batch.dim(0) : 1)));
  BasicTensor<T> x = batch;
  if (c.variant == Variant::kCnn3d) {
    for (std::size_t i = 0; i < c.conv_filters.size(); ++i) {
      const std::string prefix = "conv" + std::to_string(i + 1);
      x = conv3d(x, Conv3dParams<T>{model.parameter(prefix + ".kernel"), model.parameter(prefix + ".bias"),
                                    Padding::kSame});
      x = maxpool3d(relu(x), kCnnPool);
    }
  } else {
    ConvLstmParams<T> p;
    for (std::size_t g = 0; g < 4; ++g) {
      p.input_kernels[g] = model.parameter(std::string("convlstm.input_kernel.") + kGateSuffix[g]);
      p.recurrent_kernels[g] = model.parameter(std::string("convlstm.recurrent_kernel.") + kGateSuffix[g]);
      p.biases[g] = model.parameter(std::string("convlstm.bias.") + kGateSuffix[g]);
    }
    x = maxpool3d(maxpool3d(convlstm2d(x, p), kLstmPool), kLstmPool);
  }
  return head(model, flatten(x), mode, rng);
}

template <typename T>
std::size_t param_count(const Model<T>& model) {
  std::size_t n = 0;
  for (const auto& p : model.parameters()) n += p.value.numel();
  return n;
}

std::size_t param_count(const ModelConfig& config) {
  std::size_t n = 0;
  for (const auto& spec : parameter_specs(config)) n += product(spec.shape);
  return n;
}

std::vector<ParameterShape> parameter_layout(const ModelConfig& config) {
  std::vector<ParameterShape> out;
  for (const auto& spec : parameter_specs(config)) out.push_back({spec.name, spec.shape});
  return out;
}

#define GAITNET_INSTANTIATE(T)                                                                \
  template class Model<T>;                                                                    \
  template Model<T> build_cnn3d<T>(const ModelConfig&, Rng&);                                 \
  template Model<T> build_convlstm2d<T>(const ModelConfig&, Rng&);                            \
  template Model<T> build_model<T>(const ModelConfig&, Rng&);                                 \
  template BasicTensor<T> forward(const Model<T>&, const BasicTensor<T>&, Mode, Rng&);        \
  template std::size_t param_count(const Model<T>&);

GAITNET_INSTANTIATE(float)
GAITNET_INSTANTIATE(double)

#undef GAITNET_INSTANTIATE

}  // namespace gaitnet

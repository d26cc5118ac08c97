#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gaitnet/checkpoint.hpp"
#include "gaitnet/errors.hpp"
#include "gaitnet/stvt.hpp"
#include "gaitnet/synth.hpp"
#include "gaitnet/train.hpp"

namespace fs = std::filesystem;

namespace gaitnet {
namespace {

ModelConfig tiny_cnn() {
  ModelConfig c = ModelConfig::defaults(Variant::kCnn3d);
  c.frames = 4;
  c.height = c.width = 8;
  c.channels = 1;
  c.conv_filters = {2};
  c.dense_units = {4};
  c.dropout_rates = {0.5};
  return c;
}

ModelConfig tiny_lstm() {
  ModelConfig c = ModelConfig::defaults(Variant::kConvLstm2d);
  c.frames = 4;
  c.height = c.width = 8;
  c.channels = 1;
  c.convlstm_filters = 2;
  c.dense_units = {4};
  return c;
}

std::vector<VideoSample> tiny_samples(std::size_t n, std::uint64_t seed = 3) {
  SynthConfig sc;
  sc.normal_count = n / 2;
  sc.lame_count = n - n / 2;
  sc.frames = 4;
  sc.height = sc.width = 8;
  sc.train_fraction = 1.0;
  sc.seed = seed;
  std::vector<VideoSample> out;
  for (const auto& v : generate_synthetic(sc).videos) {
    std::vector<float> d(v.frames.data().begin(), v.frames.data().end());
    for (float& x : d) x /= 255.0f;
    out.push_back({v.entry.id, Tensor(v.frames.shape(), std::move(d)), v.entry.label, Split::kTrain, false});
  }
  return out;
}

std::vector<NamedParameter<double>> one_param(std::vector<double> values, std::vector<double> grad) {
  const Shape shape{values.size()};
  Tensor64 p(shape, std::move(values));
  p.set_requires_grad(true);
  auto g = p.mutable_grad();
  std::copy(grad.begin(), grad.end(), g.begin());
  return {{"p", p}};
}

// --- config -------------------------------------------------------------------

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = {};
  c.seed = 99;
  c.shuffle = false;
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
}

TEST(TrainConfig, ZeroEpochsRejectedByTrain) {
  Rng rng(1);
  auto state = TrainState<float>::start(build_model<float>(tiny_cnn(), rng), {});
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(train(state, tiny_samples(2), c), InvalidConfig);
}

// --- Adam ---------------------------------------------------------------------

TEST(Adam, ZeroGradientIsAFixedPoint) {
  auto params = one_param({1.0, -2.0, 3.0}, {0.0, 0.0, 0.0});
  auto state = AdamState<double>::zeros_like(params);
  for (int i = 0; i < 5; ++i) adam_step(params, state, TrainConfig{});
  EXPECT_EQ(params[0].value.data()[0], 1.0);
  EXPECT_EQ(params[0].value.data()[1], -2.0);
  EXPECT_EQ(state.step, 5u);
}

TEST(Adam, FirstStepWithUnitGradientMovesByLearningRate) {
  auto params = one_param({0.5}, {1.0});
  auto state = AdamState<double>::zeros_like(params);
  TrainConfig c;
  adam_step(params, state, c);
  // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  EXPECT_NEAR(params[0].value.data()[0], 0.5 - c.learning_rate / (1.0 + c.epsilon), 1e-15);
  EXPECT_NEAR(state.m[0][0], 0.1, 1e-15);
  EXPECT_NEAR(state.v[0][0], 0.001, 1e-15);
}

TEST(Adam, UpdateBoundedAndDeterministic) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(8);
    for (auto& x : g) x = rng.normal(0, 10);
    auto a = one_param(std::vector<double>(8, 0.0), g);
    auto b = one_param(std::vector<double>(8, 0.0), g);
    auto sa = AdamState<double>::zeros_like(a);
    auto sb = AdamState<double>::zeros_like(b);
    TrainConfig c;
    adam_step(a, sa, c);
    adam_step(b, sb, c);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_LE(std::abs(a[0].value.data()[i]), c.learning_rate * (1 + 1e-9));
      EXPECT_EQ(a[0].value.data()[i], b[0].value.data()[i]);
    }
  }
}

TEST(Adam, MissingGradientIsAContractError) {
  Tensor64 p({2}, {1.0, 2.0});
  std::vector<NamedParameter<double>> params{{"p", p}};
  auto state = AdamState<double>::zeros_like(params);
  EXPECT_THROW(adam_step(params, state, TrainConfig{}), ContractError);
  auto other = AdamState<double>::zeros_like({});
  EXPECT_THROW(adam_step(params, other, TrainConfig{}), ContractError);
}

// --- loop -----------------------------------------------------------------------

TEST(Train, EpochOrderIsSeededPermutation) {
  TrainConfig c;
  c.seed = 4;
  const auto a = epoch_order(10, c, 1);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_EQ(a, epoch_order(10, c, 1));
  EXPECT_NE(a, epoch_order(10, c, 2));
  c.shuffle = false;
  EXPECT_EQ(epoch_order(3, c, 5), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Train, SameSeedSameHistoryBitwise) {
  const auto samples = tiny_samples(6);
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 4;
  c.seed = 11;
  auto run = [&] {
    Rng rng(5);
    auto state = TrainState<float>::start(build_model<float>(tiny_cnn(), rng), c);
    train(state, samples, c);
    return state;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.history.size(), 3u);
  EXPECT_EQ(a.history, b.history);
  for (std::size_t i = 0; i < a.model.parameters().size(); ++i) {
    const auto x = a.model.parameters()[i].value.data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), b.model.parameters()[i].value.data().begin()));
  }
  EXPECT_EQ(a.adam.step, 6u);  // two batches (4 + 2) per epoch
  EXPECT_EQ(a.model.mode(), Mode::kInfer);
}

TEST(Train, ShapeMismatchAndEmptySet) {
  Rng rng(1);
  auto state = TrainState<float>::start(build_model<float>(tiny_cnn(), rng), {});
  auto samples = tiny_samples(2);
  samples[1].frames = Tensor::zeros({4, 8, 9, 1});
  EXPECT_THROW(train(state, samples, TrainConfig{}), ShapeMismatch);
  EXPECT_THROW(train(state, {}, TrainConfig{}), InvalidInput);
}

TEST(Train, NonFiniteLossNamesTheBatch) {
  Rng rng(1);
  auto state = TrainState<float>::start(build_model<float>(tiny_cnn(), rng), {});
  auto samples = tiny_samples(2);
  // a NaN output bias poisons every logit
  state.model.parameters().back().value.mutable_data()[0] = std::nanf("");
  TrainConfig c;
  c.epochs = 1;
  c.shuffle = false;
  try {
    train(state, samples, c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("batch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find(samples[0].id), std::string::npos) << msg;
  }
}

TEST(Train, GradientsDoNotLeakBetweenSteps) {
  // Two identical steps from identical parameters see identical gradients.
  Rng rng(2);
  auto model = build_model<double>(tiny_lstm(), rng);
  auto samples = tiny_samples(2);
  std::vector<std::vector<double>> grads[2];
  for (int step = 0; step < 2; ++step) {
    for (auto& p : model.parameters()) p.value.set_requires_grad(true);
    auto [x, y] = make_batch<double>(samples, {0, 1});
    Tape tape;
    Tape::Scope scope(tape);
    Rng drop(1);
    tape.backward(bce_loss(forward(model, x, Mode::kInfer, drop), y));
    for (auto& p : model.parameters()) {
      grads[step].emplace_back(p.value.grad().begin(), p.value.grad().end());
      p.value.clear_grad();
    }
  }
  EXPECT_EQ(grads[0], grads[1]);
}

TEST(Train, LossDecreasesOnTinyOverfit) {
  const auto samples = tiny_samples(4);
  TrainConfig c;
  c.epochs = 60;
  c.learning_rate = 3e-3;
  c.seed = 2;
  Rng rng(3);
  auto cfg = tiny_cnn();
  cfg.dropout_rates = {0.0};
  auto state = TrainState<double>::start(build_model<double>(cfg, rng), c);
  train(state, samples, c);
  // minimum over successive 20-epoch windows never increases
  double prev = INFINITY;
  for (std::size_t w = 0; w < 3; ++w) {
    double lo = INFINITY;
    for (std::size_t e = 20 * w; e < 20 * (w + 1); ++e) lo = std::min(lo, state.history[e].loss);
    EXPECT_LE(lo, prev);
    prev = lo;
  }
  EXPECT_LT(state.history.back().loss, state.history.front().loss);
}

TEST(Train, HistoryFormats) {
  TrainHistory h{{1, 0.5, 0.25}, {2, 0.125, 1.0}};
  EXPECT_EQ(history_from_json(history_to_json(h)), h);
  const auto text = format_history(h);
  EXPECT_NE(text.find("0.125000"), std::string::npos);
  EXPECT_NE(text.find("epoch"), std::string::npos);
}

// --- checkpoints ------------------------------------------------------------------

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gaitnet_ckpt_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(CheckpointTest, RoundTripPredictsBitwise) {
  for (auto cfg : {tiny_cnn(), tiny_lstm()}) {
    Rng rng(4);
    TrainConfig c;
    c.epochs = 2;
    auto state = TrainState<float>::start(build_model<float>(cfg, rng), c);
    const auto samples = tiny_samples(4);
    train(state, samples, c);
    const auto ck = make_checkpoint(state, c, {{"model_seed", 4}});
    save_checkpoint(dir_ / "a.ckpt", ck);
    const auto back = load_checkpoint<float>(dir_ / "a.ckpt");
    EXPECT_EQ(back.model, cfg);
    EXPECT_EQ(back.train, c);
    EXPECT_EQ(back.epoch, 2u);
    EXPECT_EQ(back.history, state.history);
    EXPECT_EQ(back.run.at("model_seed"), 4);
    EXPECT_EQ(encode_checkpoint(back), read_file_bytes(dir_ / "a.ckpt"));

    auto [x, y] = make_batch<float>(samples, {0, 1, 2, 3});
    Rng r1(0), r2(0);
    const auto before = forward(state.model, x, Mode::kInfer, r1);
    const auto after = forward(restore_model(back), x, Mode::kInfer, r2);
    EXPECT_TRUE(std::equal(before.data().begin(), before.data().end(), after.data().begin()));
  }
}

TEST_F(CheckpointTest, ResumeContinuesBitwise) {
  const auto samples = tiny_samples(6);
  TrainConfig c;
  c.epochs = 4;
  c.seed = 8;
  Rng rng(6);
  auto base = build_model<float>(tiny_cnn(), rng);
  auto full = TrainState<float>::start(Model<float>(base.config(), [&] {
                                         std::vector<NamedParameter<float>> p;
                                         for (auto& q : base.parameters()) p.push_back({q.name, q.value.clone()});
                                         return p;
                                       }()),
                                       c);
  train(full, samples, c);

  auto half = TrainState<float>::start(std::move(base), c);
  TrainConfig first = c;
  first.epochs = 2;
  train(half, samples, first);
  save_checkpoint(dir_ / "mid.ckpt", make_checkpoint(half, c));
  auto resumed = restore_state(load_checkpoint<float>(dir_ / "mid.ckpt"));
  train(resumed, samples, c);

  EXPECT_EQ(resumed.history, full.history);
  EXPECT_EQ(encode_checkpoint(make_checkpoint(resumed, c)), encode_checkpoint(make_checkpoint(full, c)));
}

TEST_F(CheckpointTest, CorruptionIsRejected) {
  Rng rng(1);
  auto state = TrainState<float>::start(build_model<float>(tiny_cnn(), rng), {});
  const std::string bytes = encode_checkpoint(make_checkpoint(state, {}));

  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint<float>(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(decode_checkpoint<float>(bad), FormatError);
  EXPECT_THROW(decode_checkpoint<float>(std::string_view(bytes).substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(decode_checkpoint<float>(bytes + "!"), FormatError);

  // one flipped byte inside the last payload (the final adam.v section)
  bad = bytes;
  bad[bytes.size() - 6] ^= 0x01;
  try {
    decode_checkpoint<float>(bad);
    FAIL() << "tampered payload accepted";
  } catch (const IntegrityError& e) {
    EXPECT_GT(e.offset(), 16u);
  }
  // a flipped byte in the header
  bad = bytes;
  bad[20] ^= 0x01;
  EXPECT_THROW(decode_checkpoint<float>(bad), IntegrityError);
}

TEST_F(CheckpointTest, EveryByteFlipIsDetected) {
  Rng rng(1);
  auto cfg = tiny_cnn();
  cfg.frames = 2;
  cfg.height = cfg.width = 4;
  cfg.dense_units = {2};
  auto state = TrainState<float>::start(build_model<float>(cfg, rng), {});
  const std::string bytes = encode_checkpoint(make_checkpoint(state, {}));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x20;
    EXPECT_THROW(decode_checkpoint<float>(bad), FormatError) << "offset " << i;
  }
}

TEST_F(CheckpointTest, PrecisionConversionAndConfigMismatch) {
  Rng rng(1);
  auto state = TrainState<float>::start(build_model<float>(tiny_cnn(), rng), {});
  save_checkpoint(dir_ / "f.ckpt", make_checkpoint(state, {}));
  const auto wide = load_checkpoint<double>(dir_ / "f.ckpt");
  EXPECT_EQ(wide.parameters[0].value.data()[0], static_cast<double>(state.model.parameters()[0].value.data()[0]));

  const auto ck = load_checkpoint<float>(dir_ / "f.ckpt");
  EXPECT_NO_THROW(require_same_config(tiny_cnn(), ck.model));
  try {
    require_same_config(tiny_lstm(), ck.model);
    FAIL() << "mismatch accepted";
  } catch (const ConfigMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("variant"), std::string::npos);
  }
  EXPECT_THROW(load_checkpoint<float>(dir_ / "missing.ckpt"), LoadError);
}

}  // namespace
}  // namespace gaitnet

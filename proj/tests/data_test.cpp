#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "gaitnet/data.hpp"
#include "gaitnet/errors.hpp"
#include "gaitnet/stvt.hpp"
#include "gaitnet/synth.hpp"

namespace fs = std::filesystem;

namespace gaitnet {
namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("gaitnet_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                         std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << s;
}

VideoSample ramp_sample(std::size_t t, std::size_t h, std::size_t w, Split split = Split::kTrain) {
  std::vector<float> v(t * h * w);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i % 251) / 255.0f;
  return {"ramp", Tensor({t, h, w, 1}, std::move(v)), Label::kLame, split, false};
}

// --- manifest ---------------------------------------------------------------

TEST(Manifest, LoadsCountsAndResolvesSources) {
  TempDir dir("manifest");
  std::string text;
  for (int i = 0; i < 50; ++i) {
    const std::string id = "v" + std::to_string(i);
    write_raw_tensor(dir.path() / "videos" / (id + ".stvt"), Tensor::zeros({2, 4, 4, 1}));
    const bool lame = i % 2 == 1;
    const bool train = i < 30;
    text += R"({"id":")" + id + R"(","source":"videos/)" + id + R"(.stvt","label":")" + (lame ? "lame" : "normal") +
            R"(","split":")" + (train ? "train" : "test") + "\"}\n";
    if (i == 10) text += "\n";
  }
  write_text(dir.path() / "m.jsonl", text);
  const auto m = load_manifest(dir.path() / "m.jsonl");
  ASSERT_EQ(m.entries.size(), 50u);
  const auto c = m.counts();
  EXPECT_EQ(c.train(), 30u);
  EXPECT_EQ(c.test(), 20u);
  EXPECT_EQ(c.train_normal, 15u);
  EXPECT_EQ(c.test_lame, 10u);
  EXPECT_TRUE(m.entries[0].source.is_absolute());
  EXPECT_EQ(m.split(Split::kTest).size(), 20u);

  save_manifest(dir.path() / "copy.jsonl", m);
  EXPECT_EQ(load_manifest(dir.path() / "copy.jsonl").entries, m.entries);
}

TEST(Manifest, ErrorsNameTheLine) {
  TempDir dir("manifest_err");
  write_raw_tensor(dir.path() / "a.stvt", Tensor::zeros({1, 2, 2, 1}));
  const std::string good = R"({"id":"a","source":"a.stvt","label":"lame","split":"train"})";
  struct Case {
    std::string body;
    std::string needle;
  };
  const std::vector<Case> cases = {
      {good + "\n{not json\n", ":2"},
      {good + "\n" + good + "\n", "duplicate"},
      {R"({"id":"b","source":"missing.stvt","label":"lame","split":"train"})", "missing.stvt"},
      {R"({"id":"b","source":"a.stvt","label":"limping","split":"train"})", ":1"},
      {R"({"id":"b","source":"a.stvt","label":"lame","split":"val"})", ":1"},
      {R"({"source":"a.stvt","label":"lame","split":"train"})", ":1"},
      {"\n\n", "no records"},
  };
  for (const auto& c : cases) {
    write_text(dir.path() / "m.jsonl", c.body);
    try {
      load_manifest(dir.path() / "m.jsonl");
      ADD_FAILURE() << "accepted: " << c.body;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(c.needle), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(load_manifest(dir.path() / "nope.jsonl"), LoadError);
}

// --- frame sampling and preprocessing --------------------------------------

TEST(Sampling, IndicesSortedDistinctDeterministic) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = sample_frame_indices(300, 25, seed);
    ASSERT_EQ(a.size(), 25u);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
    EXPECT_LT(a.back(), 300u);
    EXPECT_EQ(a, sample_frame_indices(300, 25, seed));
  }
  EXPECT_NE(sample_frame_indices(300, 25, 1), sample_frame_indices(300, 25, 2));
  const auto all = sample_frame_indices(10, 25, 3);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_THROW(sample_frame_indices(0, 25, 3), InvalidInput);
}

TEST(Sampling, RoughlyUniformCoverage) {
  std::vector<int> hits(100, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    for (auto i : sample_frame_indices(100, 10, seed)) ++hits[i];
  for (int h : hits) EXPECT_NEAR(h, 400, 80);
}

TEST(Preprocess, PadTruncate) {
  std::vector<Image> frames;
  for (int i = 0; i < 3; ++i) frames.emplace_back(1, 1, 1, static_cast<float>(i));
  const auto padded = pad_truncate(frames, 5);
  ASSERT_EQ(padded.size(), 5u);
  EXPECT_EQ(padded[3].pixels[0], 2.0f);
  EXPECT_EQ(padded[4].pixels[0], 2.0f);
  const auto cut = pad_truncate(frames, 2);
  ASSERT_EQ(cut.size(), 2u);
  EXPECT_EQ(cut[1].pixels[0], 1.0f);
  EXPECT_THROW(pad_truncate({}, 2), InvalidInput);
}

TEST(Preprocess, ResizeBehaviour) {
  Image checker(2, 2, 1);
  checker.pixels = {0, 255, 255, 0};
  const auto one = resize_frame(checker, 1, 1);
  EXPECT_FLOAT_EQ(one.pixels[0], 127.5f);

  Image big(500, 500, 3);
  for (std::size_t i = 0; i < big.pixels.size(); ++i) big.pixels[i] = static_cast<float>(i % 256);
  const auto small = resize_frame(big, 224, 224);
  EXPECT_EQ(small.height, 224u);
  EXPECT_EQ(small.width, 224u);
  EXPECT_EQ(small.channels, 3u);
  EXPECT_EQ(resize_frame(big, 500, 500), big);

  Image flat(37, 53, 1, 99.0f);
  for (float v : resize_frame(flat, 224, 224).pixels) EXPECT_FLOAT_EQ(v, 99.0f);
  EXPECT_THROW(resize_frame(flat, 0, 4), InvalidArgument);
}

TEST(Preprocess, NormalizeRange) {
  std::vector<Image> frames{Image(1, 2, 1)};
  frames[0].pixels = {128.0f, 255.0f};
  normalize(frames);
  EXPECT_FLOAT_EQ(frames[0].pixels[0], 128.0f / 255.0f);
  EXPECT_FLOAT_EQ(frames[0].pixels[1], 1.0f);
  std::vector<Image> bad{Image(1, 1, 1, 256.0f)};
  EXPECT_THROW(normalize(bad), InvalidInput);
}

TEST(Preprocess, PrepareSampleFromFrameDirectory) {
  TempDir dir("prep");
  for (int t = 0; t < 7; ++t) {
    Image f(10, 12, 3, static_cast<float>(10 * t));
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.ppm", t);
    write_netpbm(dir.path() / "clip" / name, f);
  }
  ManifestEntry e{"clip", dir.path() / "clip", Label::kLame, Split::kTrain, false};
  PreprocessConfig cfg;
  cfg.frames = 5;
  cfg.height = cfg.width = 8;
  cfg.channels = 1;
  cfg.intermediate.reset();
  cfg.seed = 4;
  const auto s = prepare_sample(e, cfg);
  EXPECT_EQ(s.frames.shape(), (Shape{5, 8, 8, 1}));
  // temporal order preserved: per-frame values are increasing
  float prev = -1.0f;
  for (std::size_t t = 0; t < 5; ++t) {
    const float v = s.frames.data()[t * 64];
    EXPECT_GT(v, prev);
    EXPECT_LE(v, 1.0f);
    prev = v;
  }
  EXPECT_EQ(prepare_sample(e, cfg).frames.data()[64], s.frames.data()[64]);

  // fewer source frames than requested pads with the last frame
  cfg.frames = 9;
  const auto padded = prepare_sample(e, cfg);
  EXPECT_EQ(padded.frames.dim(0), 9u);
  EXPECT_FLOAT_EQ(padded.frames.data()[8 * 64], 60.0f / 255.0f);
}

TEST(Preprocess, PreprocessedEntriesAreValidated) {
  TempDir dir("preprocessed");
  write_raw_tensor(dir.path() / "ok.stvt", Tensor::full({2, 3, 3, 1}, 0.5f));
  ManifestEntry e{"ok", dir.path() / "ok.stvt", Label::kNormal, Split::kTest, true};
  PreprocessConfig cfg;
  cfg.frames = 2;
  cfg.height = cfg.width = 3;
  cfg.channels = 1;
  EXPECT_EQ(prepare_sample(e, cfg).frames.data()[0], 0.5f);
  cfg.frames = 3;
  EXPECT_THROW(prepare_sample(e, cfg), InvalidInput);
  write_raw_tensor(dir.path() / "ok.stvt", Tensor::full({2, 3, 3, 1}, 7.0f));
  cfg.frames = 2;
  EXPECT_THROW(prepare_sample(e, cfg), InvalidInput);
}

// --- augmentation -----------------------------------------------------------

TEST(Augment, HflipIsAnInvolution) {
  const auto s = ramp_sample(3, 5, 7);
  const auto once = hflip(s);
  EXPECT_TRUE(once.flipped);
  EXPECT_NE(std::vector<float>(once.frames.data().begin(), once.frames.data().end()),
            std::vector<float>(s.frames.data().begin(), s.frames.data().end()));
  const auto twice = hflip(once);
  EXPECT_FALSE(twice.flipped);
  EXPECT_TRUE(std::equal(twice.frames.data().begin(), twice.frames.data().end(), s.frames.data().begin()));
  // pixel (t=1, y=2, x=0) moves to x=6
  EXPECT_EQ(once.frames.data()[(1 * 5 + 2) * 7 + 6], s.frames.data()[(1 * 5 + 2) * 7 + 0]);
}

double centroid_x(const Tensor& video, std::size_t t) {
  const auto& s = video.shape();
  double num = 0, den = 0;
  for (std::size_t y = 0; y < s[1]; ++y)
    for (std::size_t x = 0; x < s[2]; ++x) {
      const double v = video.data()[((t * s[1] + y) * s[2] + x) * s[3]];
      if (v > 190.0 / 255.0) {
        num += v * static_cast<double>(x);
        den += v;
      }
    }
  return num / den;
}

TEST(Augment, MirroredWalkersReverseDirection) {
  SynthConfig cfg;
  cfg.normal_count = 3;
  cfg.lame_count = 3;
  cfg.noise_std = 0.0;
  const auto corpus = generate_synthetic(cfg);
  for (const auto& v : corpus.videos) {
    std::vector<float> norm(v.frames.data().begin(), v.frames.data().end());
    for (float& x : norm) x /= 255.0f;
    VideoSample s{v.entry.id, Tensor(v.frames.shape(), std::move(norm)), v.entry.label, Split::kTrain, false};
    const auto f = hflip(s);
    const std::size_t last = cfg.frames - 1;
    const double drift = centroid_x(s.frames, last) - centroid_x(s.frames, 0);
    const double mirrored = centroid_x(f.frames, last) - centroid_x(f.frames, 0);
    EXPECT_GT(std::abs(drift), 3.0);
    EXPECT_NEAR(mirrored, -drift, 1e-6);
  }
}

TEST(Augment, DeterministicDoublingAndRandomMode) {
  std::vector<VideoSample> train(750, ramp_sample(1, 2, 2));
  for (std::size_t i = 0; i < train.size(); ++i) train[i].id = "s" + std::to_string(i);
  const auto aug = augment_train(train);
  ASSERT_EQ(aug.size(), 1500u);
  EXPECT_EQ(aug[750].id, "s0#flip");
  EXPECT_TRUE(aug[750].flipped);
  EXPECT_FALSE(aug[0].flipped);

  std::vector<VideoSample> test(1, ramp_sample(1, 2, 2, Split::kTest));
  EXPECT_THROW(augment_train(test), ContractError);

  Rng rng(3);
  const auto rnd = augment_train_random(train, 0.5, rng);
  EXPECT_EQ(rnd.size(), 750u);
  const auto flipped = std::count_if(rnd.begin(), rnd.end(), [](const VideoSample& s) { return s.flipped; });
  EXPECT_NEAR(static_cast<double>(flipped), 375.0, 60.0);
  EXPECT_THROW(augment_train_random(train, 1.5, rng), InvalidArgument);
}

TEST(Batch, StacksSamplesAndTargets) {
  std::vector<VideoSample> s{ramp_sample(2, 3, 3), ramp_sample(2, 3, 3)};
  s[1].label = Label::kNormal;
  auto [x, y] = make_batch<double>(s, {1, 0});
  EXPECT_EQ(x.shape(), (Shape{2, 2, 3, 3, 1}));
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(y.data()[0], 0.0);
  EXPECT_EQ(y.data()[1], 1.0);
  s[1] = ramp_sample(2, 3, 4);
  EXPECT_THROW(make_batch<float>(s, {0, 1}), InvalidInput);
}

// --- STVT -------------------------------------------------------------------

TEST(Stvt, RoundTripBothPrecisions) {
  TempDir dir("stvt");
  Rng rng(5);
  const auto a = Tensor::create({3, 4, 5}, Fill::normal(0, 1), &rng);
  write_raw_tensor(dir.path() / "a.stvt", a);
  const auto b = read_raw_tensor<float>(dir.path() / "a.stvt");
  EXPECT_EQ(b.shape(), a.shape());
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));

  const auto d = Tensor64::create({7}, Fill::normal(0, 1), &rng);
  const auto bytes = encode_stvt(d);
  EXPECT_EQ(stvt_dtype(bytes), kStvtFloat64);
  std::size_t pos = 0;
  const auto d2 = decode_stvt<double>(bytes, pos);
  EXPECT_EQ(pos, bytes.size());
  EXPECT_TRUE(std::equal(d.data().begin(), d.data().end(), d2.data().begin()));
}

TEST(Stvt, RejectsCorruption) {
  const auto bytes = encode_stvt(Tensor::ones({4, 4}));
  std::size_t pos = 0;
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_stvt<float>(bad, pos), FormatError);
  pos = 0;
  EXPECT_THROW(decode_stvt<float>(std::string_view(bytes).substr(0, bytes.size() - 3), pos), FormatError);
  bad = bytes;
  bad[4] = 9;  // version
  pos = 0;
  EXPECT_THROW(decode_stvt<float>(bad, pos), FormatError);
  TempDir dir("stvt_bad");
  write_file_bytes(dir.path() / "t.stvt", bytes + "x");
  EXPECT_THROW(read_raw_tensor<float>(dir.path() / "t.stvt"), FormatError);
  EXPECT_THROW(read_raw_tensor<float>(dir.path() / "none.stvt"), LoadError);
}

TEST(Netpbm, RoundTripAndRejects) {
  TempDir dir("pnm");
  Image img(3, 4, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i * 7);
  write_netpbm(dir.path() / "a.ppm", img);
  EXPECT_EQ(read_netpbm(dir.path() / "a.ppm"), img);
  write_file_bytes(dir.path() / "b.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(read_netpbm(dir.path() / "b.pgm"), FormatError);
  write_file_bytes(dir.path() / "c.pgm", "P2\n1 1\n255\n0");
  EXPECT_THROW(read_netpbm(dir.path() / "c.pgm"), FormatError);
}

// --- synthetic corpus -------------------------------------------------------

TEST(Synth, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.normal_count = cfg.lame_count = 2;
  cfg.frames = 6;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  ASSERT_EQ(a.videos.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.videos[i].entry, b.videos[i].entry);
    EXPECT_TRUE(std::equal(a.videos[i].frames.data().begin(), a.videos[i].frames.data().end(),
                           b.videos[i].frames.data().begin()));
  }
  cfg.seed = 2;
  const auto c = generate_synthetic(cfg);
  EXPECT_FALSE(std::equal(a.videos[0].frames.data().begin(), a.videos[0].frames.data().end(),
                          c.videos[0].frames.data().begin()));
  for (float v : a.videos[3].frames.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 255.0f);
    EXPECT_EQ(v, std::round(v));
  }
}

TEST(Synth, SplitsAndWrittenManifestLoad) {
  SynthConfig cfg;
  cfg.normal_count = cfg.lame_count = 5;
  cfg.frames = 4;
  cfg.height = cfg.width = 16;
  const auto corpus = generate_synthetic(cfg);
  const auto counts = corpus.manifest().counts();
  EXPECT_EQ(counts.train_normal, 3u);
  EXPECT_EQ(counts.test_lame, 2u);
  TempDir dir("synth");
  for (auto fmt : {SynthFormat::kStvt, SynthFormat::kFrames}) {
    fs::remove_all(dir.path() / "out");
    const auto m = load_manifest(write_synthetic(corpus, dir.path() / "out", fmt));
    ASSERT_EQ(m.entries.size(), 10u);
    EXPECT_EQ(source_frame_count(m.entries[7]), 4u);
    const auto frames = load_frames(m.entries[7], {0, 3});
    const auto& original = corpus.videos[7].frames;
    for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(frames[1].pixels[i], original.data()[3 * 256 + i]);
  }
  cfg.limp_ratio = 1.0;
  EXPECT_THROW(generate_synthetic(cfg), InvalidConfig);
}

// Per-frame vertical centroid of bright (body) pixels.
std::vector<double> body_heights(const Tensor& frames) {
  const auto& s = frames.shape();
  std::vector<double> out;
  for (std::size_t t = 0; t < s[0]; ++t) {
    double num = 0, den = 0;
    for (std::size_t y = 0; y < s[1]; ++y)
      for (std::size_t x = 0; x < s[2]; ++x)
        if (frames.data()[(t * s[1] + y) * s[2] + x] > 190.0f) {
          num += static_cast<double>(y);
          den += 1;
        }
    out.push_back(num / den);
  }
  return out;
}

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

TEST(Synth, BobEnergyOracleSeparatesClasses) {
  SynthConfig cfg;
  cfg.normal_count = cfg.lame_count = 40;
  const auto corpus = generate_synthetic(cfg);
  // |sin| over whole cycles has variance 1/2 - 4/pi^2
  const double bob = lame_bob_amplitude(cfg);
  const double threshold = 0.5 * bob * bob * (0.5 - 4.0 / (M_PI * M_PI));
  std::size_t correct = 0;
  for (const auto& v : corpus.videos) {
    const bool says_lame = variance(body_heights(v.frames)) > threshold;
    correct += says_lame == (v.entry.label == Label::kLame);
  }
  EXPECT_GE(static_cast<double>(correct) / 80.0, 0.95) << correct << "/80";
}

TEST(Synth, ZeroLimpMakesClassesIndistinguishable) {
  SynthConfig cfg;
  cfg.normal_count = cfg.lame_count = 30;
  cfg.limp_ratio = 0.0;
  const auto corpus = generate_synthetic(cfg);
  double mean[2] = {0, 0};
  for (const auto& v : corpus.videos) {
    double s = 0;
    for (float x : v.frames.data()) s += x;
    mean[static_cast<int>(v.entry.label)] += s / static_cast<double>(v.frames.numel()) / 30.0;
  }
  EXPECT_NEAR(mean[0], mean[1], 0.5);

  cfg.limp_ratio = 0.5;
  const auto lame = generate_synthetic(cfg);
  std::size_t above = 0;
  for (const auto& v : lame.videos) {
    const auto h = body_heights(v.frames);
    above += (variance(h) > 0.5) == (v.entry.label == Label::kLame);
  }
  EXPECT_GE(above, 57u);
}

}  // namespace
}  // namespace gaitnet

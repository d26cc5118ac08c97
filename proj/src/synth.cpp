#include "gaitnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gaitnet/stvt.hpp"

namespace fs = std::filesystem;

namespace gaitnet {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr float kBackground = 40.0f;
constexpr float kBodyShade = 210.0f;
constexpr float kNearLegShade = 170.0f;
constexpr float kFarLegShade = 140.0f;
constexpr double kLegSwing = 0.45;     // radians
constexpr double kBobFraction = 0.12;  // of frame height, at limp ratio 1
constexpr double kTravelFraction = 0.18;

struct Walker {
  int direction;  // +1 walks right, -1 walks left
  double start_x, base_y, travel;
  double body_a, body_b, leg_length, leg_radius;
  double phase0, cycles;
  bool lame;
  std::size_t lame_leg;
  double bob;  // peak dip in pixels
};

// Leg phase offsets: near/far pairs in antiphase, diagonal pairs in step.
constexpr double kLegPhase[4] = {0.0, kPi, kPi, 0.0};

class Canvas {
 public:
  Canvas(std::size_t h, std::size_t w) : h_(h), w_(w), px_(h * w, kBackground) {}

  // Alpha-composites `shade` with coverage from a signed distance (pixels).
  template <typename Distance>
  void paint(double x_lo, double x_hi, double y_lo, double y_hi, float shade, Distance dist) {
    const auto clampi = [](double v, std::size_t hi) {
      return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(hi)));
    };
    for (std::size_t y = clampi(std::floor(y_lo), h_); y < clampi(std::ceil(y_hi) + 1, h_); ++y)
      for (std::size_t x = clampi(std::floor(x_lo), w_); x < clampi(std::ceil(x_hi) + 1, w_); ++x) {
        const double alpha = std::clamp(0.5 - dist(x + 0.5, y + 0.5), 0.0, 1.0);
        float& p = px_[y * w_ + x];
        p = static_cast<float>(p * (1.0 - alpha) + shade * alpha);
      }
  }

  void ellipse(double cx, double cy, double a, double b, float shade) {
    paint(cx - a - 1, cx + a + 1, cy - b - 1, cy + b + 1, shade, [=](double x, double y) {
      const double d = std::hypot((x - cx) / a, (y - cy) / b);
      return (d - 1.0) * std::min(a, b);
    });
  }

  void capsule(double x0, double y0, double x1, double y1, double r, float shade) {
    paint(std::min(x0, x1) - r - 1, std::max(x0, x1) + r + 1, std::min(y0, y1) - r - 1, std::max(y0, y1) + r + 1,
          shade, [=](double x, double y) {
            const double vx = x1 - x0, vy = y1 - y0;
            const double len2 = vx * vx + vy * vy;
            const double t = len2 > 0 ? std::clamp(((x - x0) * vx + (y - y0) * vy) / len2, 0.0, 1.0) : 0.0;
            return std::hypot(x - (x0 + t * vx), y - (y0 + t * vy)) - r;
          });
  }

  std::vector<float>& pixels() { return px_; }

 private:
  std::size_t h_, w_;
  std::vector<float> px_;
};

Walker make_walker(const SynthConfig& c, bool lame, Rng& rng) {
  const double w = static_cast<double>(c.width), h = static_cast<double>(c.height);
  Walker k{};
  k.direction = rng.uniform() < 0.5 ? 1 : -1;
  k.travel = kTravelFraction * w;
  k.start_x = 0.5 * w - k.direction * 0.5 * k.travel + rng.uniform(-0.04, 0.04) * w;
  k.base_y = (0.42 + rng.uniform(-0.015, 0.015)) * h;
  k.body_a = 0.2 * w * rng.uniform(0.95, 1.05);
  k.body_b = 0.09 * h * rng.uniform(0.95, 1.05);
  k.leg_length = 0.24 * h * rng.uniform(0.95, 1.05);
  k.leg_radius = std::max(0.9, 0.025 * w);
  k.phase0 = rng.uniform(0.0, 2.0 * kPi);
  k.cycles = c.gait_frequency * rng.uniform(0.9, 1.1);
  k.lame = lame;
  k.lame_leg = static_cast<std::size_t>(rng.below(4));
  k.bob = lame ? c.limp_ratio * kBobFraction * h : 0.0;
  return k;
}

void render_frame(const Walker& k, const SynthConfig& c, std::size_t t, Rng& noise, float* out) {
  const double phase = k.phase0 + 2.0 * kPi * k.cycles * static_cast<double>(t) / static_cast<double>(c.frames);
  const double progress = c.frames > 1 ? static_cast<double>(t) / static_cast<double>(c.frames - 1) : 0.0;
  const double cx = k.start_x + k.direction * k.travel * progress;
  const double cy = k.base_y + k.bob * std::abs(std::sin(phase + kLegPhase[k.lame_leg]));

  Canvas canvas(c.height, c.width);
  // legs: 0 front-near, 1 front-far, 2 hind-near, 3 hind-far; far legs first
  for (std::size_t leg : {1u, 3u, 0u, 2u}) {
    const bool front = leg < 2;
    const bool near_side = leg % 2 == 0;
    const double hip_x = cx + k.direction * (front ? 0.6 : -0.6) * k.body_a + (near_side ? 0.08 : -0.08) * k.body_a;
    const double hip_y = cy + 0.5 * k.body_b;
    double swing = kLegSwing;
    if (k.lame && leg == k.lame_leg) swing *= 1.0 - c.limp_ratio;
    const double theta = swing * std::sin(phase + kLegPhase[leg]);
    const double foot_x = hip_x + k.direction * k.leg_length * std::sin(theta);
    const double foot_y = hip_y + k.leg_length * std::cos(theta);
    canvas.capsule(hip_x, hip_y, foot_x, foot_y, k.leg_radius, near_side ? kNearLegShade : kFarLegShade);
  }
  canvas.ellipse(cx, cy, k.body_a, k.body_b, kBodyShade);
  const double head_r = 0.45 * k.body_b + 0.5;
  canvas.ellipse(cx + k.direction * 1.05 * k.body_a, cy - 0.6 * k.body_b, head_r, head_r, kBodyShade);

  const auto& px = canvas.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = px[i] + (c.noise_std > 0 ? noise.normal(0.0, c.noise_std) : 0.0);
    out[i] = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
  }
}

std::string video_id(Label label, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", label == Label::kLame ? "lame" : "normal", i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (normal_count + lame_count == 0) throw InvalidConfig("synth: at least one video is required");
  if (frames == 0 || height < 8 || width < 8) throw InvalidConfig("synth: frames >= 1 and size >= 8 required");
  if (!(limp_ratio >= 0.0 && limp_ratio < 1.0)) throw InvalidConfig("synth: limp ratio must lie in [0, 1)");
  if (!(noise_std >= 0.0)) throw InvalidConfig("synth: noise std must be >= 0");
  if (!(gait_frequency > 0.0)) throw InvalidConfig("synth: gait frequency must be positive");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidConfig("synth: train fraction outside [0, 1]");
}

nlohmann::json SynthConfig::to_json() const {
  return {{"normal_count", normal_count}, {"lame_count", lame_count},     {"frames", frames},
          {"height", height},             {"width", width},               {"limp_ratio", limp_ratio},
          {"gait_frequency", gait_frequency}, {"noise_std", noise_std},   {"train_fraction", train_fraction},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    read("normal_count", c.normal_count);
    read("lame_count", c.lame_count);
    read("frames", c.frames);
    read("height", c.height);
    read("width", c.width);
    read("limp_ratio", c.limp_ratio);
    read("gait_frequency", c.gait_frequency);
    read("noise_std", c.noise_std);
    read("train_fraction", c.train_fraction);
    read("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("synth config: ") + e.what());
  }
  return c;
}

double lame_bob_amplitude(const SynthConfig& config) {
  return config.limp_ratio * kBobFraction * static_cast<double>(config.height);
}

DatasetManifest SyntheticCorpus::manifest() const {
  DatasetManifest m;
  for (const auto& v : videos) m.entries.push_back(v.entry);
  return m;
}

SyntheticCorpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  SyntheticCorpus corpus;
  for (Label label : {Label::kNormal, Label::kLame}) {
    const std::size_t count = label == Label::kLame ? config.lame_count : config.normal_count;
    const auto train = static_cast<std::size_t>(std::lround(config.train_fraction * static_cast<double>(count)));
    for (std::size_t i = 0; i < count; ++i) {
      SyntheticVideo video;
      video.entry.id = video_id(label, i);
      video.entry.label = label;
      video.entry.split = i < train ? Split::kTrain : Split::kTest;
      video.entry.source = fs::path("videos") / (video.entry.id + ".stvt");

      Rng rng(derive_seed(config.seed, video.entry.id));
      const Walker walker = make_walker(config, label == Label::kLame, rng);
      const std::size_t frame_size = config.height * config.width;
      std::vector<float> data(config.frames * frame_size);
      for (std::size_t t = 0; t < config.frames; ++t) render_frame(walker, config, t, rng, data.data() + t * frame_size);
      video.frames = Tensor({config.frames, config.height, config.width, 1}, std::move(data));
      corpus.videos.push_back(std::move(video));
    }
  }
  return corpus;
}

fs::path write_synthetic(const SyntheticCorpus& corpus, const fs::path& dir, SynthFormat format) {
  DatasetManifest manifest;
  for (const auto& v : corpus.videos) {
    ManifestEntry e = v.entry;
    if (format == SynthFormat::kStvt) {
      write_raw_tensor(dir / e.source, v.frames);
    } else {
      e.source = fs::path("videos") / e.id;
      const auto frames = tensor_to_frames(v.frames);
      for (std::size_t t = 0; t < frames.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.pgm", t);
        write_netpbm(dir / e.source / name, frames[t]);
      }
    }
    e.source = dir / e.source;
    manifest.entries.push_back(std::move(e));
  }
  const fs::path manifest_path = dir / "manifest.jsonl";
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

}  // namespace gaitnet

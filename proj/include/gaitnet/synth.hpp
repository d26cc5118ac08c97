#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitnet/data.hpp"

namespace gaitnet {

// Synthetic walker videos: a body ellipse with a head and four swinging legs
// crossing the frame horizontally on a dark background. Lame walkers swing
// one leg with reduced amplitude and dip their body in time with that leg.
struct SynthConfig {
  std::size_t normal_count = 25;
  std::size_t lame_count = 25;
  std::size_t frames = 40;  // source frames per video
  std::size_t height = 64;
  std::size_t width = 64;
  double limp_ratio = 0.5;      // 0 makes the classes indistinguishable
  double gait_frequency = 2.0;  // stride cycles per video
  double noise_std = 6.0;       // additive pixel noise, 0..255 scale
  double train_fraction = 0.6;  // per class, rounded
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SyntheticVideo {
  ManifestEntry entry;  // source is the file name the video is written to
  Tensor frames;        // (T, H, W, 1), integer pixel values in [0, 255]
};

struct SyntheticCorpus {
  std::vector<SyntheticVideo> videos;

  DatasetManifest manifest() const;
};

SyntheticCorpus generate_synthetic(const SynthConfig& config);

// Peak vertical body displacement (pixels) of a lame walker under `config`.
double lame_bob_amplitude(const SynthConfig& config);

enum class SynthFormat { kStvt, kFrames };

// Writes videos under dir/videos and dir/manifest.jsonl; returns the
// manifest path.
std::filesystem::path write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir,
                                      SynthFormat format = SynthFormat::kStvt);

}  // namespace gaitnet

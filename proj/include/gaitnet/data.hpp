#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gaitnet/image.hpp"
#include "gaitnet/rng.hpp"
#include "gaitnet/tensor.hpp"

namespace gaitnet {

enum class Label : int { kNormal = 0, kLame = 1 };
enum class Split { kTrain, kTest };

std::string to_string(Label label);
std::string to_string(Split split);
Label parse_label(const std::string& token);  // "normal" | "lame"
Split parse_split(const std::string& token);  // "train" | "test"

// One line of a manifest. `source` is either a directory of numbered
// netpbm frames or an STVT file holding a (T, H, W, C) tensor of 0..255
// pixel values. Entries marked `preprocessed` point at STVT tensors already
// normalized to [0, 1] at the model's input shape (written by `ingest`).
struct ManifestEntry {
  std::string id;
  std::filesystem::path source;  // absolute after loading
  Label label = Label::kNormal;
  Split split = Split::kTrain;
  bool preprocessed = false;

  bool operator==(const ManifestEntry&) const = default;
};

struct ManifestCounts {
  std::size_t train_normal = 0, train_lame = 0, test_normal = 0, test_lame = 0;

  std::size_t train() const { return train_normal + train_lame; }
  std::size_t test() const { return test_normal + test_lame; }
  std::size_t total() const { return train() + test(); }
};

// JSON Lines: one object per line with keys "id", "source", "label",
// "split" and optionally "preprocessed". Blank lines are ignored. Relative
// sources resolve against the manifest's directory.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  ManifestCounts counts() const;
  std::vector<ManifestEntry> split(Split which) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes sources relative to the manifest's directory when possible.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct VideoSample {
  std::string id;
  Tensor frames;  // (T, H, W, C), values in [0, 1]
  Label label = Label::kNormal;
  Split split = Split::kTrain;
  bool flipped = false;
};

// Chooses min(n, total) distinct indices uniformly at random, returned in
// increasing (temporal) order. Deterministic in `seed`.
std::vector<std::size_t> sample_frame_indices(std::size_t total, std::size_t n, std::uint64_t seed);

template <typename Frame>
std::vector<Frame> sample_frames(const std::vector<Frame>& all_frames, std::size_t n, std::uint64_t seed) {
  if (all_frames.empty()) throw InvalidInput("sample_frames: video has no frames");
  std::vector<Frame> picked;
  for (auto i : sample_frame_indices(all_frames.size(), n, seed)) picked.push_back(all_frames[i]);
  return picked;
}

// Truncates to the first n frames or pads by repeating the last frame.
std::vector<Image> pad_truncate(std::vector<Image> frames, std::size_t n);

// Bilinear resampling with half-pixel centres.
Image resize_frame(const Image& frame, std::size_t height, std::size_t width);

// Maps 8-bit pixel values to [0, 1] by dividing by 255.
void normalize(std::vector<Image>& frames);

// Mirrors every frame on the width axis; toggles `flipped`.
VideoSample hflip(const VideoSample& sample);

// Originals followed by one mirrored copy of each (ids suffixed "#flip").
// Every sample must belong to the train split.
std::vector<VideoSample> augment_train(const std::vector<VideoSample>& samples);

// Alternative mode: each train sample is replaced by its mirror with
// probability p.
std::vector<VideoSample> augment_train_random(const std::vector<VideoSample>& samples, double p, Rng& rng);

struct PreprocessConfig {
  std::size_t frames = 25;
  std::size_t height = 224;
  std::size_t width = 224;
  std::size_t channels = 3;
  // Resize applied to every source frame before the final resize.
  std::optional<std::pair<std::size_t, std::size_t>> intermediate{{500, 500}};
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; "intermediate": null disables it.
  static PreprocessConfig from_json(const nlohmann::json& j);
};

// Frame count of a source without decoding pixel data where possible.
std::size_t source_frame_count(const ManifestEntry& entry);

// Reads the listed frames of a source (indices into its temporal order).
std::vector<Image> load_frames(const ManifestEntry& entry, const std::vector<std::size_t>& indices);

// sample -> resize -> pad/truncate -> normalize, for one manifest entry.
VideoSample prepare_sample(const ManifestEntry& entry, const PreprocessConfig& config);

std::vector<VideoSample> prepare_split(const DatasetManifest& manifest, Split which, const PreprocessConfig& config);

struct IngestSummary {
  std::size_t train_videos = 0, test_videos = 0;
  std::size_t frames_per_video = 0;
  std::size_t train_frames = 0;            // before augmentation
  std::size_t augmented_train_frames = 0;  // after flip-doubling
  std::size_t test_frames = 0;
  DatasetManifest manifest;  // preprocessed entries

  nlohmann::json to_json() const;
};

// Preprocesses every entry once, writing out_dir/videos/<id>.stvt and
// out_dir/manifest.jsonl with entries marked preprocessed. Videos are
// handled one at a time.
IngestSummary ingest(const DatasetManifest& manifest, const PreprocessConfig& config,
                     const std::filesystem::path& out_dir);

Tensor frames_to_tensor(const std::vector<Image>& frames);
std::vector<Image> tensor_to_frames(const Tensor& video);

// Stacks samples[indices] into a (B, T, H, W, C) batch and (B, 1) targets.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> make_batch(const std::vector<VideoSample>& samples,
                                                     const std::vector<std::size_t>& indices);

}  // namespace gaitnet

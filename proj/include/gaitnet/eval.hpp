#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitnet/data.hpp"
#include "gaitnet/models.hpp"

namespace gaitnet {

inline constexpr double kDefaultThreshold = 0.5;

struct FramePredictions {
  std::string id;
  std::vector<double> probabilities;  // one per sampled frame
  std::vector<Label> labels;          // probability >= threshold -> lame
  double clip_probability = 0.0;      // the whole clip scored once

  std::size_t lame_count() const;
};

// Thresholds per-frame probabilities (>= threshold is lame).
FramePredictions label_frames(std::string id, std::vector<double> probabilities, double clip_probability,
                              double threshold = kDefaultThreshold);

// Scores every frame by tiling it across the model's full temporal extent
// (a static clip) and running the frozen model in inference mode. The clip
// itself is also scored once. `chunk` bounds how many tilings share a batch.
template <typename T>
FramePredictions predict_video(const Model<T>& model, const VideoSample& sample, double threshold = kDefaultThreshold,
                               std::size_t chunk = 8);

// Label held by at least ceil(n/2) frames. Even counts throw ContractError
// unless `allow_even`, in which case a tie goes to lame.
Label majority_vote(std::span<const Label> labels, bool allow_even = false);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;  // lame is the positive class

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted);

// Percentages. A metric whose denominator is zero is left empty.
struct Metrics {
  std::optional<double> accuracy, precision, recall, f1;
};

Metrics metrics(const ConfusionMatrix& cm);

// Every matrix with tp+fp+fn+tn == n whose defined metrics lie within
// `tolerance` percentage points of the given values. An empty target
// matches anything; a target set on an undefined metric never matches.
std::vector<ConfusionMatrix> invert_metrics(std::size_t n, const Metrics& target, double tolerance);

struct VideoVerdict {
  std::string id;
  Label truth = Label::kNormal;
  Label predicted = Label::kNormal;
  std::size_t lame_frames = 0;
  std::size_t frames = 0;
  double clip_probability = 0.0;
  std::vector<double> frame_probabilities;

  bool operator==(const VideoVerdict&) const = default;
};

struct EvalOptions {
  double threshold = kDefaultThreshold;
  bool allow_even = false;
  std::size_t jobs = 1;  // videos scored in parallel
};

struct EvalReport {
  ModelConfig model;
  std::string config_hash;
  nlohmann::json seeds = nlohmann::json::object();
  double threshold = kDefaultThreshold;
  std::vector<VideoVerdict> verdicts;
  ConfusionMatrix matrix;
  Metrics scores;
  nlohmann::json metadata = nlohmann::json::object();  // timestamps live only here
};

// FNV-1a of the config's canonical JSON, as 16 hex digits.
std::string config_hash(const ModelConfig& config);

template <typename T>
EvalReport evaluate(const Model<T>& model, const std::vector<VideoSample>& test, const EvalOptions& options = {});

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Metrics table and aligned confusion matrix.
std::string format_report(const EvalReport& report);

// Writes `path` (JSON) and the text table next to it (extension .txt).
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace gaitnet

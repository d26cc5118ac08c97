#include "gaitnet/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>
#include <thread>

#include "gaitnet/errors.hpp"
#include "gaitnet/stvt.hpp"

namespace gaitnet {
namespace {

std::string fixed2(const std::optional<double>& v) {
  if (!v) return "undef";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::size_t FramePredictions::lame_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kLame));
}

FramePredictions label_frames(std::string id, std::vector<double> probabilities, double clip_probability,
                              double threshold) {
  FramePredictions p{std::move(id), std::move(probabilities), {}, clip_probability};
  for (double q : p.probabilities) p.labels.push_back(q >= threshold ? Label::kLame : Label::kNormal);
  return p;
}

template <typename T>
FramePredictions predict_video(const Model<T>& model, const VideoSample& sample, double threshold,
                               std::size_t chunk) {
  Shape want = model.config().input_shape(1);
  want.erase(want.begin());
  if (sample.frames.shape() != want)
    throw InvalidInput("predict: video '" + sample.id + "' has shape " + to_string(sample.frames.shape()) +
                       ", model expects " + to_string(want));
  if (chunk == 0) chunk = 1;
  const std::size_t frames = want[0];
  const std::size_t per_frame = sample.frames.numel() / frames;
  const auto src = sample.frames.data();
  Rng unused(0);

  std::vector<double> probs;
  for (std::size_t first = 0; first < frames; first += chunk) {
    const std::size_t k = std::min(chunk, frames - first);
    std::vector<T> data;
    data.reserve(k * frames * per_frame);
    for (std::size_t b = 0; b < k; ++b) {
      const auto frame = src.subspan((first + b) * per_frame, per_frame);
      for (std::size_t t = 0; t < frames; ++t)
        for (float v : frame) data.push_back(static_cast<T>(v));
    }
    const auto out = forward(model, BasicTensor<T>(model.config().input_shape(k), std::move(data)), Mode::kInfer,
                             unused);
    for (T v : out.data()) probs.push_back(static_cast<double>(v));
  }
  std::vector<T> clip(src.begin(), src.end());
  const auto whole = forward(model, BasicTensor<T>(model.config().input_shape(1), std::move(clip)), Mode::kInfer,
                             unused);
  return label_frames(sample.id, std::move(probs), static_cast<double>(whole.item()), threshold);
}

Label majority_vote(std::span<const Label> labels, bool allow_even) {
  if (labels.empty()) throw ContractError("majority_vote: no frame labels");
  if (labels.size() % 2 == 0 && !allow_even)
    throw ContractError("majority_vote: even frame count " + std::to_string(labels.size()) +
                        " can tie; enable the tie rule to allow it");
  const auto lame = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kLame));
  return 2 * lame >= labels.size() ? Label::kLame : Label::kNormal;
}

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size())
    throw InvalidArgument("confusion: " + std::to_string(truth.size()) + " labels vs " +
                          std::to_string(predicted.size()) + " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::kLame, p = predicted[i] == Label::kLame;
    if (t && p) ++cm.tp;
    else if (!t && p) ++cm.fp;
    else if (t && !p) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

std::vector<ConfusionMatrix> invert_metrics(std::size_t n, const Metrics& target, double tolerance) {
  const auto fits = [tolerance](const std::optional<double>& want, const std::optional<double>& got) {
    if (!want) return true;
    return got.has_value() && std::abs(*got - *want) <= tolerance;
  };
  std::vector<ConfusionMatrix> out;
  for (std::size_t tp = 0; tp <= n; ++tp)
    for (std::size_t fp = 0; tp + fp <= n; ++fp)
      for (std::size_t fn = 0; tp + fp + fn <= n; ++fn) {
        const ConfusionMatrix cm{tp, fp, fn, n - tp - fp - fn};
        const auto m = metrics(cm);
        if (fits(target.accuracy, m.accuracy) && fits(target.precision, m.precision) &&
            fits(target.recall, m.recall) && fits(target.f1, m.f1))
          out.push_back(cm);
      }
  return out;
}

std::string config_hash(const ModelConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename T>
EvalReport evaluate(const Model<T>& model, const std::vector<VideoSample>& test, const EvalOptions& options) {
  if (test.empty()) throw InvalidInput("evaluate: the test split is empty");
  std::vector<FramePredictions> preds(test.size());
  std::vector<std::exception_ptr> errors(test.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, test.size()));
  const auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < test.size(); i += jobs) {
      try {
        preds[i] = predict_video(model, test[i], options.threshold);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalReport r;
  r.model = model.config();
  r.config_hash = config_hash(model.config());
  r.threshold = options.threshold;
  std::vector<Label> truth, predicted;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Label verdict = majority_vote(preds[i].labels, options.allow_even);
    r.verdicts.push_back({test[i].id, test[i].label, verdict, preds[i].lame_count(), preds[i].labels.size(),
                          preds[i].clip_probability, preds[i].probabilities});
    truth.push_back(test[i].label);
    predicted.push_back(verdict);
  }
  r.matrix = confusion(truth, predicted);
  r.scores = metrics(r.matrix);
  r.metadata["generated_at"] = utc_now();
  return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"id", v.id},
                        {"truth", to_string(v.truth)},
                        {"predicted", to_string(v.predicted)},
                        {"lame_frames", v.lame_frames},
                        {"frames", v.frames},
                        {"clip_probability", v.clip_probability},
                        {"frame_probabilities", v.frame_probabilities}});
  nlohmann::json undefined = nlohmann::json::array();
  const std::pair<const char*, const std::optional<double>*> named[] = {
      {"accuracy", &r.scores.accuracy}, {"precision", &r.scores.precision}, {"recall", &r.scores.recall},
      {"f1", &r.scores.f1}};
  nlohmann::json scores;
  for (const auto& [name, value] : named) {
    scores[name] = opt_json(*value);
    if (!*value) undefined.push_back(name);
  }
  return {{"format", "gaitnet-eval-report"},
          {"model", r.model.to_json()},
          {"config_hash", r.config_hash},
          {"seeds", r.seeds},
          {"threshold", r.threshold},
          {"confusion", {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"fn", r.matrix.fn}, {"tn", r.matrix.tn}}},
          {"metrics", scores},
          {"undefined_metrics", undefined},
          {"verdicts", verdicts},
          {"metadata", r.metadata}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    if (j.at("format") != "gaitnet-eval-report") throw FormatError("report: not an evaluation report", 0);
    r.model = ModelConfig::from_json(j.at("model"));
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seeds = j.at("seeds");
    r.threshold = j.at("threshold").get<double>();
    const auto& cm = j.at("confusion");
    r.matrix = {cm.at("tp").get<std::size_t>(), cm.at("fp").get<std::size_t>(), cm.at("fn").get<std::size_t>(),
                cm.at("tn").get<std::size_t>()};
    const auto& s = j.at("metrics");
    r.scores = {opt_from(s.at("accuracy")), opt_from(s.at("precision")), opt_from(s.at("recall")),
                opt_from(s.at("f1"))};
    for (const auto& v : j.at("verdicts"))
      r.verdicts.push_back({v.at("id").get<std::string>(), parse_label(v.at("truth").get<std::string>()),
                            parse_label(v.at("predicted").get<std::string>()), v.at("lame_frames").get<std::size_t>(),
                            v.at("frames").get<std::size_t>(), v.at("clip_probability").get<double>(),
                            v.at("frame_probabilities").get<std::vector<double>>()});
    r.metadata = j.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what(), 0);
  } catch (const FormatError&) {
    throw;
  } catch (const InputError& e) {
    throw FormatError(std::string("report: ") + e.what(), 0);
  }
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "model %s  config %s  videos %zu  threshold %.2f\n\n",
                to_string(r.model.variant).c_str(), r.config_hash.c_str(), r.matrix.total(), r.threshold);
  out << line;
  std::snprintf(line, sizeof line, "%-12s %9s %10s %8s %9s\n", "Model", "Accuracy", "Precision", "Recall", "F1-score");
  out << line;
  std::snprintf(line, sizeof line, "%-12s %9s %10s %8s %9s\n\n", to_string(r.model.variant).c_str(),
                fixed2(r.scores.accuracy).c_str(), fixed2(r.scores.precision).c_str(), fixed2(r.scores.recall).c_str(),
                fixed2(r.scores.f1).c_str());
  out << line;
  out << "                  predicted\n";
  std::snprintf(line, sizeof line, "%-16s %6s %7s\n", "", "lame", "normal");
  out << line;
  std::snprintf(line, sizeof line, "%-16s %6zu %7zu\n", "actual lame", r.matrix.tp, r.matrix.fn);
  out << line;
  std::snprintf(line, sizeof line, "%-16s %6zu %7zu\n\n", "actual normal", r.matrix.fp, r.matrix.tn);
  out << line;
  std::snprintf(line, sizeof line, "%-24s %-7s %-9s %7s %6s\n", "video", "truth", "predicted", "frames", "clip");
  out << line;
  for (const auto& v : r.verdicts) {
    std::snprintf(line, sizeof line, "%-24s %-7s %-9s %3zu/%-3zu %6.3f\n", v.id.c_str(), to_string(v.truth).c_str(),
                  to_string(v.predicted).c_str(), v.lame_frames, v.frames, v.clip_probability);
    out << line;
  }
  return out.str();
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  write_file_bytes(path, report_to_json(report).dump(2) + "\n");
  auto text_path = path;
  text_path.replace_extension(".txt");
  write_file_bytes(text_path, format_report(report));
}

EvalReport read_report(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("report '" + path.string() + "': " + e.what(), 0);
  }
  return report_from_json(j);
}

#define GAITNET_INSTANTIATE(T)                                                                           \
  template FramePredictions predict_video(const Model<T>&, const VideoSample&, double, std::size_t);    \
  template EvalReport evaluate(const Model<T>&, const std::vector<VideoSample>&, const EvalOptions&);

GAITNET_INSTANTIATE(float)
GAITNET_INSTANTIATE(double)

#undef GAITNET_INSTANTIATE

}  // namespace gaitnet

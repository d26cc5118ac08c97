#include "gaitnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gaitnet/stvt.hpp"

namespace fs = std::filesystem;

namespace gaitnet {
namespace {

Image convert_channels(const Image& in, std::size_t channels) {
  if (in.channels == channels) return in;
  Image out(in.height, in.width, channels);
  const std::size_t n = in.height * in.width;
  if (in.channels == 3 && channels == 1) {
    for (std::size_t i = 0; i < n; ++i)
      out.pixels[i] = 0.299f * in.pixels[3 * i] + 0.587f * in.pixels[3 * i + 1] + 0.114f * in.pixels[3 * i + 2];
  } else if (in.channels == 1 && channels == 3) {
    for (std::size_t i = 0; i < n; ++i) std::fill_n(out.pixels.begin() + 3 * i, 3, in.pixels[i]);
  } else {
    throw InvalidInput("cannot convert " + std::to_string(in.channels) + "-channel frames to " +
                       std::to_string(channels) + " channels");
  }
  return out;
}

std::vector<fs::path> frame_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_netpbm_path(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

Image frame_of(const Tensor& video, std::size_t t) {
  Image img(video.dim(1), video.dim(2), video.dim(3));
  const std::size_t n = img.pixels.size();
  std::copy_n(video.data().begin() + static_cast<std::ptrdiff_t>(t * n), n, img.pixels.begin());
  return img;
}

Tensor read_video_tensor(const ManifestEntry& entry) {
  auto video = read_raw_tensor<float>(entry.source);
  if (video.ndim() != 4)
    throw InvalidInput("video '" + entry.id + "': expected a (T,H,W,C) tensor, got " + to_string(video.shape()));
  return video;
}

}  // namespace

std::string to_string(Label label) { return label == Label::kLame ? "lame" : "normal"; }
std::string to_string(Split split) { return split == Split::kTest ? "test" : "train"; }

Label parse_label(const std::string& token) {
  if (token == "normal") return Label::kNormal;
  if (token == "lame") return Label::kLame;
  throw InvalidArgument("unknown label '" + token + "' (expected normal or lame)");
}

Split parse_split(const std::string& token) {
  if (token == "train") return Split::kTrain;
  if (token == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + token + "' (expected train or test)");
}

ManifestCounts DatasetManifest::counts() const {
  ManifestCounts c;
  for (const auto& e : entries) {
    const bool lame = e.label == Label::kLame;
    if (e.split == Split::kTrain)
      (lame ? c.train_lame : c.train_normal)++;
    else
      (lame ? c.test_lame : c.test_normal)++;
  }
  return c;
}

std::vector<ManifestEntry> DatasetManifest::split(Split which) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == which) out.push_back(e);
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("manifest '" + path.string() + "' cannot be opened");
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest manifest;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    ManifestEntry e;
    try {
      const auto j = nlohmann::json::parse(line);
      e.id = j.at("id").get<std::string>();
      e.source = j.at("source").get<std::string>();
      e.label = parse_label(j.at("label").get<std::string>());
      e.split = parse_split(j.at("split").get<std::string>());
      e.preprocessed = j.value("preprocessed", false);
    } catch (const nlohmann::json::exception& ex) {
      throw LoadError(where + ": malformed record: " + ex.what());
    } catch (const InvalidArgument& ex) {
      throw LoadError(where + ": " + ex.what());
    }
    if (e.id.empty()) throw LoadError(where + ": empty id");
    if (!seen.insert(e.id).second) throw LoadError(where + ": duplicate id '" + e.id + "'");
    if (e.source.is_relative()) e.source = base / e.source;
    if (!fs::exists(e.source))
      throw LoadError(where + ": source for '" + e.id + "' not found: " + e.source.string());
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) throw LoadError("manifest '" + path.string() + "' has no records");
  return manifest;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = fs::absolute(path).parent_path();
  std::ostringstream out;
  for (const auto& e : manifest.entries) {
    // in-memory paths are relative to the working directory
    fs::path source = fs::absolute(e.source).lexically_normal();
    auto rel = source.lexically_relative(base);
    if (!rel.empty() && rel.native().rfind("..", 0) != 0) source = rel;
    nlohmann::ordered_json j{{"id", e.id},
                             {"source", source.generic_string()},
                             {"label", to_string(e.label)},
                             {"split", to_string(e.split)}};
    if (e.preprocessed) j["preprocessed"] = true;
    out << j.dump() << '\n';
  }
  write_file_bytes(path, out.str());
}

std::vector<std::size_t> sample_frame_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
  if (total == 0) throw InvalidInput("sample_frames: video has no frames");
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  if (total <= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(total - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Image> pad_truncate(std::vector<Image> frames, std::size_t n) {
  if (frames.empty()) throw InvalidInput("pad_truncate: no frames");
  if (frames.size() > n) frames.resize(n);
  while (frames.size() < n) frames.push_back(frames.back());
  return frames;
}

Image resize_frame(const Image& frame, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw InvalidArgument("resize_frame: target extents must be positive");
  if (frame.height == height && frame.width == width) return frame;
  Image out(height, width, frame.channels);
  const double sy = static_cast<double>(frame.height) / static_cast<double>(height);
  const double sx = static_cast<double>(frame.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, double(frame.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, frame.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, double(frame.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, frame.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < frame.channels; ++c) {
        const double top = (1 - wx) * frame.at(y0, x0, c) + wx * frame.at(y0, x1, c);
        const double bottom = (1 - wx) * frame.at(y1, x0, c) + wx * frame.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

void normalize(std::vector<Image>& frames) {
  for (auto& f : frames)
    for (float& v : f.pixels) {
      if (!(v >= 0.0f && v <= 255.0f))
        throw InvalidInput("normalize: pixel value " + std::to_string(v) + " outside [0, 255]");
      v /= 255.0f;
    }
}

VideoSample hflip(const VideoSample& sample) {
  const auto& s = sample.frames.shape();
  const std::size_t frames = s[0], height = s[1], width = s[2], c = s[3];
  std::vector<float> out(sample.frames.numel());
  auto in = sample.frames.data();
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t src = ((t * height + y) * width + x) * c;
        const std::size_t dst = ((t * height + y) * width + (width - 1 - x)) * c;
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(src), c, out.begin() + static_cast<std::ptrdiff_t>(dst));
      }
  VideoSample flipped = sample;
  flipped.frames = Tensor(s, std::move(out));
  flipped.flipped = !sample.flipped;
  return flipped;
}

std::vector<VideoSample> augment_train(const std::vector<VideoSample>& samples) {
  for (const auto& s : samples)
    if (s.split != Split::kTrain)
      throw ContractError("augment_train: sample '" + s.id + "' is not in the train split");
  std::vector<VideoSample> out = samples;
  out.reserve(2 * samples.size());
  for (const auto& s : samples) {
    auto f = hflip(s);
    f.id += "#flip";
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<VideoSample> augment_train_random(const std::vector<VideoSample>& samples, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("augment_train_random: probability outside [0, 1]");
  std::vector<VideoSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.split != Split::kTrain)
      throw ContractError("augment_train_random: sample '" + s.id + "' is not in the train split");
    out.push_back(rng.uniform() < p ? hflip(s) : s);
  }
  return out;
}

nlohmann::json PreprocessConfig::to_json() const {
  nlohmann::json j{{"frames", frames}, {"height", height}, {"width", width}, {"channels", channels}, {"seed", seed}};
  j["intermediate"] = intermediate ? nlohmann::json::array({intermediate->first, intermediate->second})
                                   : nlohmann::json(nullptr);
  return j;
}

PreprocessConfig PreprocessConfig::from_json(const nlohmann::json& j) {
  PreprocessConfig c;
  try {
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    read("frames", c.frames);
    read("height", c.height);
    read("width", c.width);
    read("channels", c.channels);
    read("seed", c.seed);
    if (j.contains("intermediate")) {
      const auto& im = j.at("intermediate");
      if (im.is_null()) c.intermediate.reset();
      else c.intermediate = {im.at(0).get<std::size_t>(), im.at(1).get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("preprocess config: ") + e.what());
  }
  if (c.frames == 0 || c.height == 0 || c.width == 0 || (c.channels != 1 && c.channels != 3))
    throw InvalidConfig("preprocess config: frames and size must be positive, channels 1 or 3");
  if (c.intermediate && (c.intermediate->first == 0 || c.intermediate->second == 0))
    throw InvalidConfig("preprocess config: intermediate size must be positive");
  return c;
}

std::size_t source_frame_count(const ManifestEntry& entry) {
  if (fs::is_directory(entry.source)) return frame_files(entry.source).size();
  return read_video_tensor(entry).dim(0);
}

std::vector<Image> load_frames(const ManifestEntry& entry, const std::vector<std::size_t>& indices) {
  std::vector<Image> frames;
  frames.reserve(indices.size());
  if (fs::is_directory(entry.source)) {
    const auto files = frame_files(entry.source);
    for (auto i : indices) {
      if (i >= files.size()) throw InvalidInput("video '" + entry.id + "': frame index out of range");
      frames.push_back(read_netpbm(files[i]));
    }
  } else {
    const auto video = read_video_tensor(entry);
    for (auto i : indices) {
      if (i >= video.dim(0)) throw InvalidInput("video '" + entry.id + "': frame index out of range");
      frames.push_back(frame_of(video, i));
    }
  }
  return frames;
}

VideoSample prepare_sample(const ManifestEntry& entry, const PreprocessConfig& config) {
  VideoSample sample{entry.id, {}, entry.label, entry.split, false};
  if (entry.preprocessed) {
    auto video = read_video_tensor(entry);
    const Shape want{config.frames, config.height, config.width, config.channels};
    if (video.shape() != want)
      throw InvalidInput("preprocessed video '" + entry.id + "' has shape " + to_string(video.shape()) +
                         ", expected " + to_string(want));
    for (float v : video.data())
      if (!(v >= 0.0f && v <= 1.0f)) throw InvalidInput("preprocessed video '" + entry.id + "' not in [0, 1]");
    sample.frames = std::move(video);
    return sample;
  }

  const std::size_t total = source_frame_count(entry);
  if (total == 0) throw InvalidInput("video '" + entry.id + "' has no frames");
  const auto indices = sample_frame_indices(total, config.frames, derive_seed(config.seed, entry.id));
  std::vector<Image> frames = load_frames(entry, indices);
  for (auto& f : frames) {
    f = convert_channels(f, config.channels);
    if (config.intermediate) f = resize_frame(f, config.intermediate->first, config.intermediate->second);
    f = resize_frame(f, config.height, config.width);
  }
  frames = pad_truncate(std::move(frames), config.frames);
  normalize(frames);
  sample.frames = frames_to_tensor(frames);
  return sample;
}

std::vector<VideoSample> prepare_split(const DatasetManifest& manifest, Split which, const PreprocessConfig& config) {
  std::vector<VideoSample> out;
  for (const auto& e : manifest.entries)
    if (e.split == which) out.push_back(prepare_sample(e, config));
  return out;
}

nlohmann::json IngestSummary::to_json() const {
  return {{"train_videos", train_videos},
          {"test_videos", test_videos},
          {"frames_per_video", frames_per_video},
          {"train_frames", train_frames},
          {"augmented_train_frames", augmented_train_frames},
          {"test_frames", test_frames}};
}

IngestSummary ingest(const DatasetManifest& manifest, const PreprocessConfig& config, const fs::path& out_dir) {
  IngestSummary s;
  s.frames_per_video = config.frames;
  for (const auto& e : manifest.entries) {
    VideoSample sample = prepare_sample(e, config);
    const std::size_t frames = sample.frames.dim(0);
    if (e.split == Split::kTrain) {
      ++s.train_videos;
      s.train_frames += frames;
      for (const auto& a : augment_train({sample})) s.augmented_train_frames += a.frames.dim(0);
    } else {
      ++s.test_videos;
      s.test_frames += frames;
    }
    ManifestEntry out = e;
    out.source = out_dir / "videos" / (e.id + ".stvt");
    out.preprocessed = true;
    write_raw_tensor(out.source, sample.frames);
    s.manifest.entries.push_back(std::move(out));
  }
  save_manifest(out_dir / "manifest.jsonl", s.manifest);
  return s;
}

Tensor frames_to_tensor(const std::vector<Image>& frames) {
  if (frames.empty()) throw InvalidInput("frames_to_tensor: no frames");
  const auto& f0 = frames.front();
  std::vector<float> data;
  data.reserve(frames.size() * f0.pixels.size());
  for (const auto& f : frames) {
    if (f.height != f0.height || f.width != f0.width || f.channels != f0.channels)
      throw InvalidInput("frames_to_tensor: frames differ in size");
    data.insert(data.end(), f.pixels.begin(), f.pixels.end());
  }
  return Tensor({frames.size(), f0.height, f0.width, f0.channels}, std::move(data));
}

std::vector<Image> tensor_to_frames(const Tensor& video) {
  if (video.ndim() != 4) throw InvalidInput("tensor_to_frames: expected (T,H,W,C), got " + to_string(video.shape()));
  std::vector<Image> frames;
  for (std::size_t t = 0; t < video.dim(0); ++t) frames.push_back(frame_of(video, t));
  return frames;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> make_batch(const std::vector<VideoSample>& samples,
                                                     const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw InvalidInput("make_batch: empty batch");
  const Shape& s = samples.at(indices.front()).frames.shape();
  const std::size_t per = samples.at(indices.front()).frames.numel();
  std::vector<T> data;
  data.reserve(indices.size() * per);
  std::vector<T> targets;
  for (auto i : indices) {
    const auto& sample = samples.at(i);
    if (sample.frames.shape() != s)
      throw InvalidInput("make_batch: sample '" + sample.id + "' has shape " + to_string(sample.frames.shape()) +
                         ", expected " + to_string(s));
    for (float v : sample.frames.data()) data.push_back(static_cast<T>(v));
    targets.push_back(sample.label == Label::kLame ? T(1) : T(0));
  }
  Shape batch_shape{indices.size()};
  batch_shape.insert(batch_shape.end(), s.begin(), s.end());
  return {BasicTensor<T>(batch_shape, std::move(data)), BasicTensor<T>({indices.size(), 1}, std::move(targets))};
}

template std::pair<Tensor, Tensor> make_batch<float>(const std::vector<VideoSample>&, const std::vector<std::size_t>&);
template std::pair<Tensor64, Tensor64> make_batch<double>(const std::vector<VideoSample>&,
                                                          const std::vector<std::size_t>&);

}  // namespace gaitnet

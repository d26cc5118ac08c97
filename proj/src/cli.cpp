#include "gaitnet/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gaitnet/checkpoint.hpp"
#include "gaitnet/errors.hpp"
#include "gaitnet/eval.hpp"
#include "gaitnet/gemm.hpp"
#include "gaitnet/gradcheck_suite.hpp"
#include "gaitnet/plot.hpp"
#include "gaitnet/stvt.hpp"
#include "gaitnet/synth.hpp"
#include "gaitnet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gaitnet {
namespace {

struct Flags {
  std::string config_path, out, precision = "f32";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  std::string manifest, checkpoint, input, id, model;
  std::size_t frames = 0, size = 0, channels = 0, lstm_filters = 0, kernel = 0, intermediate = 0;
  std::vector<std::size_t> filters, dense;
  std::vector<double> dropout;

  std::size_t epochs = 0, batch = 0;
  double lr = 0, p_aug = 0;
  bool no_shuffle = false, plots = false;
  std::string augment, resume;

  double threshold = 0;
  bool allow_even = false;

  std::size_t normal = 0, lame = 0, synth_frames = 0;
  double limp = 0, noise = 0, gait = 0, train_fraction = 0;
  std::string format;

  std::vector<std::string> ops;
  double tolerance = 0;
  bool inject_conv3d_bug = false;
};

bool given(const CLI::App* app, const std::string& name) {
  const auto* o = app->get_option_no_throw(name);
  return o != nullptr && o->count() > 0;
}

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  const auto text = read_file_bytes(path);
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw InvalidConfig("config file '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw InvalidConfig("config file '" + path + "': " + e.what());
  }
}

template <typename V>
V pick(bool flag_given, const V& flag_value, const json& file, const char* key, const V& fallback) {
  if (flag_given) return flag_value;
  if (file.contains(key)) return file.at(key).get<V>();
  return fallback;
}

json section(const json& file, const char* key) {
  if (!file.contains(key)) return json::object();
  if (!file.at(key).is_object()) throw InvalidConfig(std::string("config section '") + key + "' must be an object");
  return file.at(key);
}

// Resolved run configuration: defaults, then the config file, then flags.
struct RunConfig {
  json resolved;
  json model_overrides = json::object();  // only the explicitly set model fields
};

RunConfig resolve(const CLI::App& app, const CLI::App* sub, const Flags& f) {
  const json file = read_config_file(f.config_path);
  RunConfig rc;
  json& c = rc.resolved;
  try {
    c["command"] = sub->get_name();
    const auto seed = pick<std::uint64_t>(given(&app, "--seed"), f.seed, file, "seed", 0);
    c["seed"] = seed;
    c["seeds"] = {{"model", derive_seed(seed, "model")},
                  {"data", derive_seed(seed, "data")},
                  {"train", derive_seed(seed, "train")},
                  {"augment", derive_seed(seed, "augment")}};
    c["jobs"] = pick<std::size_t>(given(&app, "--jobs"), f.jobs, file, "jobs", 1);
    c["precision"] = pick<std::string>(given(&app, "--precision"), f.precision, file, "precision", "f32");
    const char* env = std::getenv(kOutEnv);
    c["out"] = pick<std::string>(given(&app, "--out"), f.out, file, "out", env && *env ? env : "gaitnet_out");
    c["manifest"] = pick<std::string>(given(sub, "--manifest"), f.manifest, file, "manifest", "");
    c["checkpoint"] = pick<std::string>(given(sub, "--checkpoint"), f.checkpoint, file, "checkpoint", "");

    // model: only explicit fields are recorded as overrides
    json& mo = rc.model_overrides;
    mo = section(file, "model");
    if (given(sub, "--model")) mo["variant"] = f.model;
    if (given(sub, "--frames")) mo["frames"] = f.frames;
    if (given(sub, "--size")) mo["height"] = mo["width"] = f.size;
    if (given(sub, "--channels")) mo["channels"] = f.channels;
    if (given(sub, "--filters")) mo["conv_filters"] = f.filters;
    if (given(sub, "--lstm-filters")) mo["convlstm_filters"] = f.lstm_filters;
    if (given(sub, "--kernel")) mo["conv_kernel"] = mo["convlstm_kernel"] = f.kernel;
    if (given(sub, "--dense")) mo["dense_units"] = f.dense;
    if (given(sub, "--dropout")) mo["dropout_rates"] = f.dropout;
    const Variant variant = parse_variant(mo.value("variant", std::string("cnn3d")));
    json model = ModelConfig::defaults(variant).to_json();
    model.merge_patch(mo);
    c["model"] = model;

    json train = TrainConfig{}.to_json();
    train.merge_patch(section(file, "train"));
    if (given(sub, "--epochs")) train["epochs"] = f.epochs;
    if (given(sub, "--batch")) train["batch_size"] = f.batch;
    if (given(sub, "--lr")) train["learning_rate"] = f.lr;
    if (given(sub, "--no-shuffle")) train["shuffle"] = false;
    train["seed"] = c["seeds"]["train"];
    c["train"] = train;

    json pre = PreprocessConfig{}.to_json();
    pre.merge_patch(section(file, "preprocess"));
    if (given(sub, "--intermediate"))
      pre["intermediate"] = f.intermediate == 0 ? json(nullptr) : json::array({f.intermediate, f.intermediate});
    pre["frames"] = model["frames"];
    pre["height"] = model["height"];
    pre["width"] = model["width"];
    pre["channels"] = model["channels"];
    pre["seed"] = c["seeds"]["data"];
    c["preprocess"] = pre;
    c["preprocess_explicit"] = file.contains("preprocess") || given(sub, "--intermediate");

    json aug = {{"mode", "flip"}, {"probability", 0.5}};
    aug.merge_patch(section(file, "augment"));
    if (given(sub, "--augment")) aug["mode"] = f.augment;
    if (given(sub, "--p-aug")) aug["probability"] = f.p_aug;
    c["augment"] = aug;

    json ev = {{"threshold", kDefaultThreshold}, {"allow_even", false}};
    ev.merge_patch(section(file, "eval"));
    if (given(sub, "--threshold")) ev["threshold"] = f.threshold;
    if (given(sub, "--allow-even")) ev["allow_even"] = true;
    c["eval"] = ev;

    json synth = SynthConfig{}.to_json();
    synth.merge_patch(section(file, "synth"));
    if (given(sub, "--normal")) synth["normal_count"] = f.normal;
    if (given(sub, "--lame")) synth["lame_count"] = f.lame;
    if (given(sub, "--source-frames")) synth["frames"] = f.synth_frames;
    if (sub->get_name() == "synth" && given(sub, "--frames")) synth["frames"] = f.frames;
    if (sub->get_name() == "synth" && given(sub, "--size")) synth["height"] = synth["width"] = f.size;
    if (given(sub, "--limp")) synth["limp_ratio"] = f.limp;
    if (given(sub, "--noise")) synth["noise_std"] = f.noise;
    if (given(sub, "--gait-frequency")) synth["gait_frequency"] = f.gait;
    if (given(sub, "--train-fraction")) synth["train_fraction"] = f.train_fraction;
    synth["seed"] = seed;
    synth["format"] = given(sub, "--format") ? f.format : synth.value("format", std::string("stvt"));
    c["synth"] = synth;

    json gc = {{"ops", json::array()}, {"tolerance", 1e-4}};
    gc.merge_patch(section(file, "gradcheck"));
    if (given(sub, "--op")) gc["ops"] = f.ops;
    if (given(sub, "--tolerance")) gc["tolerance"] = f.tolerance;
    c["gradcheck"] = gc;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("config: ") + e.what());
  }
  const auto precision = c["precision"].get<std::string>();
  if (precision != "f32" && precision != "f64") throw InvalidConfig("precision must be f32 or f64");
  const auto mode = c["augment"]["mode"].get<std::string>();
  if (mode != "flip" && mode != "random" && mode != "none")
    throw InvalidConfig("augment mode must be flip, random or none");
  return rc;
}

fs::path out_dir(const json& c) { return fs::path(c["out"].get<std::string>()); }

void write_run_config(const json& c) { write_file_bytes(out_dir(c) / "run_config.json", c.dump(2) + "\n"); }

fs::path required_path(const json& c, const char* key, const char* flag) {
  const auto p = c[key].get<std::string>();
  if (p.empty()) throw InvalidArgument(std::string("missing ") + flag);
  return p;
}

std::string counts_line(const ManifestCounts& n) {
  std::ostringstream s;
  s << "train " << n.train() << " (" << n.train_normal << " normal, " << n.train_lame << " lame), test " << n.test()
    << " (" << n.test_normal << " normal, " << n.test_lame << " lame)";
  return s.str();
}

// Preprocessing for a stored model: shape from the checkpoint, intermediate
// resize from the checkpoint's run record unless set explicitly.
PreprocessConfig preprocess_for(const json& c, const ModelConfig& model, const json& ckpt_run) {
  json pre = c["preprocess"];
  if (!c["preprocess_explicit"].get<bool>() && ckpt_run.contains("preprocess") &&
      ckpt_run["preprocess"].contains("intermediate"))
    pre["intermediate"] = ckpt_run["preprocess"]["intermediate"];
  pre["frames"] = model.frames;
  pre["height"] = model.height;
  pre["width"] = model.width;
  pre["channels"] = model.channels;
  return PreprocessConfig::from_json(pre);
}

template <typename T>
Model<T> load_model_checked(const RunConfig& rc, Checkpoint<T>& ck) {
  ck = load_checkpoint<T>(required_path(rc.resolved, "checkpoint", "--checkpoint"));
  if (!rc.model_overrides.empty()) {
    json expected = ck.model.to_json();
    expected.merge_patch(rc.model_overrides);
    require_same_config(ModelConfig::from_json(expected), ck.model);
  }
  return restore_model(ck);
}

int cmd_synth(const json& c, std::ostream& out) {
  const auto sc = SynthConfig::from_json(c["synth"]);
  const auto fmt = c["synth"]["format"].get<std::string>();
  if (fmt != "stvt" && fmt != "frames") throw InvalidConfig("synth format must be stvt or frames");
  const auto corpus = generate_synthetic(sc);
  const auto path = write_synthetic(corpus, out_dir(c), fmt == "stvt" ? SynthFormat::kStvt : SynthFormat::kFrames);
  write_run_config(c);
  out << "wrote " << corpus.videos.size() << " videos: " << counts_line(corpus.manifest().counts()) << "\n";
  out << "manifest " << path.string() << "\n";
  return kExitOk;
}

int cmd_ingest(const json& c, std::ostream& out) {
  const auto manifest = load_manifest(required_path(c, "manifest", "--manifest"));
  const auto pc = PreprocessConfig::from_json(c["preprocess"]);
  const auto s = ingest(manifest, pc, out_dir(c));
  write_file_bytes(out_dir(c) / "ingest_summary.json", s.to_json().dump(2) + "\n");
  write_run_config(c);
  out << "videos: " << counts_line(manifest.counts()) << "\n";
  out << "frames per video: " << s.frames_per_video << "\n";
  out << "train frame-samples: " << s.train_frames << " (" << s.augmented_train_frames << " after augmentation)\n";
  out << "test frame-samples: " << s.test_frames << "\n";
  out << "manifest " << (out_dir(c) / "manifest.jsonl").string() << "\n";
  return kExitOk;
}

template <typename T>
int cmd_train(const json& c, bool plots, const std::string& resume, std::ostream& out) {
  const auto manifest = load_manifest(required_path(c, "manifest", "--manifest"));
  const auto mc = ModelConfig::from_json(c["model"]);
  mc.validate();
  const auto tc = TrainConfig::from_json(c["train"]);
  tc.validate();
  const auto pc = PreprocessConfig::from_json(c["preprocess"]);
  const auto counts = manifest.counts();
  if (counts.train() == 0) throw InvalidInput("train: the manifest has no train entries");
  if (counts.train_normal == 0 || counts.train_lame == 0)
    throw InvalidInput("train: the train split must contain both classes (" + counts_line(counts) + ")");

  auto samples = prepare_split(manifest, Split::kTrain, pc);
  const auto mode = c["augment"]["mode"].get<std::string>();
  if (mode == "flip") {
    samples = augment_train(samples);
  } else if (mode == "random") {
    Rng rng(c["seeds"]["augment"].get<std::uint64_t>());
    samples = augment_train_random(samples, c["augment"]["probability"].get<double>(), rng);
  }

  TrainState<T> state = [&] {
    if (!resume.empty()) {
      const auto ck = load_checkpoint<T>(resume);
      require_same_config(mc, ck.model);
      return restore_state(ck);
    }
    Rng rng(c["seeds"]["model"].get<std::uint64_t>());
    return TrainState<T>::start(build_model<T>(mc, rng), tc);
  }();

  const json run = {{"seeds", c["seeds"]}, {"preprocess", c["preprocess"]}, {"augment", c["augment"]}};
  const fs::path dir = out_dir(c);
  const fs::path ckpt_path = dir / "checkpoint.gnck";
  out << "training " << to_string(mc.variant) << " (" << param_count(mc) << " parameters) on " << samples.size()
      << " samples, " << tc.epochs << " epochs, batch " << tc.batch_size << "\n";
  train(state, samples, tc, [&](const EpochRecord& r) {
    char line[96];
    std::snprintf(line, sizeof line, "epoch %3zu  loss %.6f  accuracy %.4f\n", r.epoch, r.loss, r.accuracy);
    out << line << std::flush;
    save_checkpoint(ckpt_path, make_checkpoint(state, tc, run));
  });
  save_checkpoint(ckpt_path, make_checkpoint(state, tc, run));
  write_file_bytes(dir / "history.txt", format_history(state.history));
  write_file_bytes(dir / "history.json", history_to_json(state.history).dump(2) + "\n");
  if (plots) {
    std::vector<double> loss, acc;
    for (const auto& r : state.history) {
      loss.push_back(r.loss);
      acc.push_back(r.accuracy);
    }
    write_netpbm(dir / "loss.pgm", plot_series(loss));
    write_netpbm(dir / "accuracy.pgm", plot_series(acc));
  }
  write_run_config(c);
  out << "checkpoint " << ckpt_path.string() << "\n";
  return kExitOk;
}

template <typename T>
int cmd_evaluate(const RunConfig& rc, bool plots, std::ostream& out) {
  const json& c = rc.resolved;
  Checkpoint<T> ck;
  const auto model = load_model_checked(rc, ck);
  const auto manifest = load_manifest(required_path(c, "manifest", "--manifest"));
  const auto pc = preprocess_for(c, model.config(), ck.run);
  const auto test = prepare_split(manifest, Split::kTest, pc);
  if (test.empty()) throw InvalidInput("evaluate: the manifest has no test entries");
  EvalOptions opts;
  opts.threshold = c["eval"]["threshold"].get<double>();
  opts.allow_even = c["eval"]["allow_even"].get<bool>();
  opts.jobs = c["jobs"].get<std::size_t>();
  auto report = evaluate(model, test, opts);
  report.seeds = {{"evaluate", c["seeds"]}, {"checkpoint", ck.run.value("seeds", json::object())}};
  const fs::path dir = out_dir(c);
  write_report(dir / "report.json", report);
  if (plots) write_netpbm(dir / "confusion.pgm", plot_confusion(report.matrix));
  write_run_config(c);
  out << format_report(report);
  return kExitOk;
}

template <typename T>
int cmd_predict(const RunConfig& rc, const Flags& f, std::ostream& out) {
  const json& c = rc.resolved;
  Checkpoint<T> ck;
  const auto model = load_model_checked(rc, ck);
  if (f.input.empty()) throw InvalidArgument("missing --input");
  const fs::path input = fs::absolute(f.input);
  if (!fs::exists(input)) throw LoadError("input '" + input.string() + "' not found");
  ManifestEntry entry{f.id.empty() ? input.stem().string() : f.id, input, Label::kNormal, Split::kTest, false};
  const auto sample = prepare_sample(entry, preprocess_for(c, model.config(), ck.run));
  const auto p = predict_video(model, sample, c["eval"]["threshold"].get<double>());
  const Label verdict = majority_vote(p.labels, c["eval"]["allow_even"].get<bool>());

  out << "video " << entry.id << "\n";
  out << "frame  probability  label\n";
  char line[80];
  for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
    std::snprintf(line, sizeof line, "%5zu  %11.6f  %s\n", i + 1, p.probabilities[i], to_string(p.labels[i]).c_str());
    out << line;
  }
  const std::size_t lame = p.lame_count(), n = p.labels.size();
  std::snprintf(line, sizeof line, "clip probability %.6f\n", p.clip_probability);
  out << line;
  out << "vote: " << lame << " lame, " << n - lame << " normal\n";
  out << "verdict: " << to_string(verdict) << " (" << (verdict == Label::kLame ? lame : n - lame) << "/" << n
      << " frames)\n";
  return kExitOk;
}

int cmd_gradcheck(const json& c, bool inject, std::ostream& out) {
  GradCheckOptions opts;
  opts.ops = c["gradcheck"]["ops"].get<std::vector<std::string>>();
  opts.tolerance = c["gradcheck"]["tolerance"].get<double>();
  opts.seed = c["seed"].get<std::uint64_t>();
  opts.flip_conv3d_gradient = inject;
  const auto checks = run_gradcheck_suite(opts);
  out << format_gradcheck(checks, opts.tolerance);
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const OpCheck& k) { return k.passed; });
  out << (ok ? "all ops passed\n" : "gradient check FAILED\n");
  return ok ? kExitOk : kExitRuntime;
}

void add_model_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--model", f.model, "Architecture: cnn3d or convlstm2d");
  sub->add_option("--frames", f.frames, "Frames per clip");
  sub->add_option("--size", f.size, "Frame height and width");
  sub->add_option("--channels", f.channels, "Colour channels (1 or 3)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  use_single_threaded_blas();
  Flags f;
  CLI::App app{"Spatiotemporal video classifier for lameness detection"};
  app.require_subcommand(1);
  app.add_option("--config", f.config_path, "JSON config file; flags override it");
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--out", f.out, std::string("Output directory (default $") + kOutEnv + " or ./gaitnet_out)");
  app.add_option("--jobs", f.jobs, "Parallel videos during evaluation");
  app.add_option("--precision", f.precision, "f32 or f64");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic walker corpus");
  synth->add_option("--normal", f.normal, "Normal videos");
  synth->add_option("--lame", f.lame, "Lame videos");
  synth->add_option("--frames", f.frames, "Frames per video");
  synth->add_option("--size", f.size, "Frame height and width");
  synth->add_option("--limp", f.limp, "Limp ratio in [0, 1)");
  synth->add_option("--noise", f.noise, "Pixel noise std (0..255 scale)");
  synth->add_option("--gait-frequency", f.gait, "Stride cycles per video");
  synth->add_option("--train-fraction", f.train_fraction, "Per-class train share");
  synth->add_option("--format", f.format, "stvt or frames");

  auto* ingest_cmd = app.add_subcommand("ingest", "Preprocess a manifest into model-ready tensors");
  ingest_cmd->add_option("--manifest", f.manifest, "Input manifest (JSON Lines)");
  add_model_flags(ingest_cmd, f);
  ingest_cmd->add_option("--intermediate", f.intermediate, "Intermediate square resize, 0 to skip");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--manifest", f.manifest, "Input manifest (JSON Lines)");
  add_model_flags(train_cmd, f);
  train_cmd->add_option("--filters", f.filters, "cnn3d filters per conv block")->delimiter(',');
  train_cmd->add_option("--lstm-filters", f.lstm_filters, "convlstm2d filters");
  train_cmd->add_option("--kernel", f.kernel, "Convolution kernel size");
  train_cmd->add_option("--dense", f.dense, "Dense layer widths")->delimiter(',');
  train_cmd->add_option("--dropout", f.dropout, "Dropout rate per dense layer")->delimiter(',');
  train_cmd->add_option("--intermediate", f.intermediate, "Intermediate square resize, 0 to skip");
  train_cmd->add_option("--epochs", f.epochs, "Epochs");
  train_cmd->add_option("--batch", f.batch, "Batch size");
  train_cmd->add_option("--lr", f.lr, "Learning rate");
  train_cmd->add_flag("--no-shuffle", f.no_shuffle, "Keep sample order fixed");
  train_cmd->add_option("--augment", f.augment, "flip (doubling), random or none");
  train_cmd->add_option("--p-aug", f.p_aug, "Mirror probability for --augment random");
  train_cmd->add_option("--resume", f.resume, "Continue from a checkpoint");
  train_cmd->add_flag("--plots", f.plots, "Write loss and accuracy charts (PGM)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  eval_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint file");
  eval_cmd->add_option("--manifest", f.manifest, "Input manifest (JSON Lines)");
  add_model_flags(eval_cmd, f);
  eval_cmd->add_option("--intermediate", f.intermediate, "Intermediate square resize, 0 to skip");
  eval_cmd->add_option("--threshold", f.threshold, "Frame probability threshold");
  eval_cmd->add_flag("--allow-even", f.allow_even, "Allow even frame counts (a tie votes lame)");
  eval_cmd->add_flag("--plots", f.plots, "Write the confusion matrix chart (PGM)");

  auto* predict_cmd = app.add_subcommand("predict", "Classify one video");
  predict_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint file");
  predict_cmd->add_option("--input", f.input, "STVT file or directory of netpbm frames");
  predict_cmd->add_option("--id", f.id, "Video id (default: input file stem)");
  add_model_flags(predict_cmd, f);
  predict_cmd->add_option("--intermediate", f.intermediate, "Intermediate square resize, 0 to skip");
  predict_cmd->add_option("--threshold", f.threshold, "Frame probability threshold");
  predict_cmd->add_flag("--allow-even", f.allow_even, "Allow even frame counts (a tie votes lame)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op in 64-bit precision");
  grad_cmd->add_option("--op", f.ops, "Restrict to these ops");
  grad_cmd->add_option("--tolerance", f.tolerance, "Maximum relative error");
  grad_cmd->add_flag("--inject-conv3d-sign-bug", f.inject_conv3d_bug, "Test fixture: negate conv3d gradients");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const RunConfig rc = resolve(app, sub, f);
    const json& c = rc.resolved;
    const bool wide = c["precision"] == "f64";
    const std::string name = sub->get_name();
    if (name == "synth") return cmd_synth(c, out);
    if (name == "ingest") return cmd_ingest(c, out);
    if (name == "train") return wide ? cmd_train<double>(c, f.plots, f.resume, out) : cmd_train<float>(c, f.plots, f.resume, out);
    if (name == "evaluate") return wide ? cmd_evaluate<double>(rc, f.plots, out) : cmd_evaluate<float>(rc, f.plots, out);
    if (name == "predict") return wide ? cmd_predict<double>(rc, f, out) : cmd_predict<float>(rc, f, out);
    return cmd_gradcheck(c, f.inject_conv3d_bug, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const RuntimeFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace gaitnet

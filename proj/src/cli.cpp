// Copyright 2026 The proact Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "proact/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "proact/checkpoint.hpp"
#include "proact/data.hpp"
#include "proact/metrics.hpp"
#include "proact/streaming.hpp"
#include "proact/synth.hpp"
#include "proact/training.hpp"

namespace proact::cli {

namespace fs = std::filesystem;

namespace {

struct InitOpts {
  std::string out;
  std::uint64_t seed = 0;
  int n_visual = 48;
  int n_event = 8;
  std::int64_t window = 4096;
  std::string corpus;
};

struct SynthOpts {
  std::string out;
  std::int64_t seconds = 600;
  int streams = 1;
  std::uint64_t seed = 0;
  std::string prefix = "synth";
};

struct PreprocessOpts {
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  std::int64_t horizon = -1;
  std::int64_t clip_len = 36;
  std::int64_t overlap = 18;
  std::vector<int> quotas = {60, 120, 60};
};

struct SimulateOpts {
  std::string model;
  std::string stream;
  std::string out;
  double tau = model::kDefaultThreshold;
  std::int64_t window = 0;
  int frame_tokens = 64;
  bool timing = false;
};

struct TrainOpts {
  std::string model;
  std::string streams;
  std::string labels;
  std::string out;
  std::string curve;
  int steps = 2000;
  double alpha = 0.2;
  double gamma = 5.0;
  double lr = 3e-3;
  int batch = 8;
  std::uint64_t seed = 0;
  std::int64_t clip_len = 36;
  std::int64_t overlap = 18;
  std::int64_t window = 0;
  bool no_cls = false;
  bool no_smooth = false;
  bool no_rate = false;
  bool no_lm = false;
};

struct EvaluateOpts {
  std::string run;
  std::string gt;
  std::string scores;
  std::string out;
  double delta = 3.0;
  double penalty = 1.0;
  double omega = 0.5;
  double tau = -1.0;  // re-threshold the run's scores when >= 0
};

struct ProfileOpts {
  std::string model;
  std::string stream;
  std::vector<std::int64_t> windows;
  std::vector<int> frame_tokens = {64};
  double tau = model::kDefaultThreshold;
  std::string records;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  return out;
}

void require_file(const std::string& p, const char* what) {
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorCode::kIo, fmt::format("{} '{}' does not exist", what, p));
  }
}

void require_dir(const std::string& p, const char* what) {
  if (!fs::is_directory(p)) {
    throw Error(ErrorCode::kIo,
                fmt::format("{} '{}' is not a directory", what, p));
  }
}

std::string stem_of(const fs::path& p, std::string_view suffix) {
  std::string name = p.filename().string();
  if (name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return name.substr(0, name.size() - suffix.size());
  }
  return p.stem().string();
}

// ---------------------------------------------------------------- init

void cmd_init(const InitOpts& o, std::ostream& out) {
  std::vector<std::string> corpus = synth::corpus();
  if (!o.corpus.empty()) {
    std::istringstream in(slurp(o.corpus));
    std::string line;
    while (std::getline(in, line)) corpus.push_back(line);
  }
  ckpt::Checkpoint ck;
  ck.vocab = text::Vocab::build(corpus, o.n_visual, o.n_event);
  ck.config.vocab_size = ck.vocab.size();
  ck.config.window = o.window;
  ck.config.validate();
  ck.weights = model::ModelWeights::random(ck.config, o.seed);
  ckpt::save(o.out, ck);
  out << fmt::format("model={} vocab={} window={} seed={}\n", o.out,
                     ck.vocab.size(), ck.config.window, o.seed);
}

// ---------------------------------------------------------------- synth

void cmd_synth(const SynthOpts& o, std::ostream& out) {
  if (o.streams < 1) throw Error(ErrorCode::kInvalidConfig, "--streams must be >= 1");
  fs::create_directories(o.out);
  long positives = 0;
  for (int k = 0; k < o.streams; ++k) {
    synth::SynthConfig sc;
    sc.seconds = o.seconds;
    sc.seed = o.seed + static_cast<std::uint64_t>(k);
    const auto s = synth::generate(sc);
    const std::string stem =
        o.streams == 1 ? o.prefix : fmt::format("{}_{:03d}", o.prefix, k);
    const fs::path dir(o.out);
    {
      auto f = open_out(dir / (stem + ".stream.jsonl"));
      for (const auto& c : s.chunks) {
        nlohmann::json j = {{"t", c.t}, {"visual", c.visual}};
        f << j.dump() << '\n';
      }
    }
    open_out(dir / (stem + ".labels.json")) << data::labels_json(s.labels) << '\n';
    {
      auto f = open_out(dir / (stem + ".captions.jsonl"));
      for (const auto& c : s.captions) f << data::to_json_line(c) << '\n';
    }
    for (int y : s.labels) positives += y;
  }
  const double total = static_cast<double>(o.seconds) * o.streams;
  out << fmt::format("streams={} seconds={} label_rate={:.3f}\n", o.streams,
                     o.seconds, total > 0 ? positives / total : 0.0);
}

// ----------------------------------------------------------- preprocess

void cmd_preprocess(const PreprocessOpts& o, bool sample, std::ostream& out) {
  require_file(o.input, "input");
  if (o.quotas.size() != 3) {
    throw Error(ErrorCode::kInvalidConfig, "--quotas takes exactly three values");
  }
  const auto segments = data::read_asr(o.input);
  std::vector<data::PerSecondCaption> captions;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto part = data::split_caption(segments[i], static_cast<int>(i));
    captions.insert(captions.end(), part.begin(), part.end());
  }
  std::stable_sort(captions.begin(), captions.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  captions = data::merge_collisions(captions);

  std::int64_t horizon = o.horizon;
  if (horizon < 0) horizon = captions.empty() ? 0 : captions.back().second + 1;
  std::erase_if(captions, [&](const auto& c) {
    if (c.second >= 0 && c.second < horizon) return false;
    spdlog::warn("dropping caption at second {} outside horizon {}", c.second,
                 horizon);
    return true;
  });
  const auto labels = data::derive_labels(captions, horizon);
  auto clips = data::segment_clips(horizon, o.clip_len, o.overlap);
  data::assign_response_rates(clips, labels);

  const std::string stem = stem_of(o.input, ".jsonl");
  const fs::path dir(o.out);
  fs::create_directories(dir);
  {
    auto f = open_out(dir / (stem + ".captions.jsonl"));
    for (const auto& c : captions) f << data::to_json_line(c) << '\n';
  }
  open_out(dir / (stem + ".labels.json")) << data::labels_json(labels) << '\n';
  open_out(dir / (stem + ".clips.json")) << data::clips_json(clips) << '\n';

  std::string extra;
  if (sample) {
    const auto s = data::stratify(clips, {o.quotas[0], o.quotas[1], o.quotas[2]},
                                  o.seed);
    const auto picked = s.all();
    open_out(dir / (stem + ".sample.json")) << data::clips_json(picked) << '\n';
    extra = fmt::format(" sampled={}/{}/{}", s.bins[0].size(), s.bins[1].size(),
                        s.bins[2].size());
  }
  long speak = 0;
  for (int y : labels) speak += y;
  out << fmt::format("segments={} captions={} seconds={} speak_seconds={} clips={}{}\n",
                     segments.size(), captions.size(), horizon, speak,
                     clips.size(), extra);
}

// ------------------------------------------------------------- simulate

stream::EngineConfig engine_config(double tau, std::int64_t window,
                                   int frame_tokens) {
  stream::EngineConfig ec;
  ec.tau = tau;
  ec.window = window;
  ec.frame_tokens = frame_tokens;
  return ec;
}

// Every run is linted before anything is written.
stream::StreamRunRecord checked_run(const model::Transformer& tf,
                                    const text::Vocab& vocab,
                                    std::span<const stream::ChunkInput> chunks,
                                    const stream::EngineConfig& ec) {
  auto rec = stream::run_stream(tf, vocab, chunks, ec);
  const auto lint = stream::lint_context(rec.transcript, vocab);
  if (!lint.ok) {
    throw Error(ErrorCode::kShape, "context check failed: " + lint.message);
  }
  return rec;
}

void cmd_simulate(const SimulateOpts& o, std::ostream& out) {
  require_dir(o.model, "model");
  require_file(o.stream, "stream");
  const auto ck = ckpt::load(o.model);
  const model::Transformer tf(ck.config, ck.weights);
  const auto chunks = stream::read_stream(o.stream);
  const auto rec = checked_run(tf, ck.vocab, chunks,
                               engine_config(o.tau, o.window, o.frame_tokens));
  auto f = open_out(o.out);
  long speak = 0;
  long evictions = 0;
  for (const auto& s : rec.steps) {
    f << stream::to_json_line(s, o.timing) << '\n';
    speak += s.action == model::Action::kSpeak;
    evictions += static_cast<long>(s.evictions.size());
  }
  out << fmt::format("steps={} speak={} evictions={} window={}\n",
                     rec.steps.size(), speak, evictions, rec.window);
}

// ---------------------------------------------------------------- train

void cmd_train(const TrainOpts& o, std::ostream& out) {
  require_dir(o.model, "model");
  require_dir(o.streams, "streams");
  const std::string label_dir = o.labels.empty() ? o.streams : o.labels;
  require_dir(label_dir, "labels");

  train::TrainConfig tc;
  tc.loss.alpha = o.alpha;
  tc.loss.gamma = o.gamma;
  tc.loss.use_cls = !o.no_cls;
  tc.loss.use_smooth = !o.no_smooth;
  tc.loss.use_rate = !o.no_rate;
  tc.steps = o.steps;
  tc.lr = o.lr;
  tc.batch = o.batch;
  tc.seed = o.seed;
  tc.train_lm = !o.no_lm;
  tc.validate();

  auto ck = ckpt::load(o.model);
  const model::Transformer tf(ck.config, ck.weights);
  const auto ec = engine_config(model::kDefaultThreshold, o.window, 64);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.streams)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.ends_with(".stream.jsonl")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error(ErrorCode::kIo, "no *.stream.jsonl files in " + o.streams);
  }

  std::vector<train::ClipSample> clips;
  for (const auto& file : files) {
    const std::string stem = stem_of(file, ".stream.jsonl");
    const fs::path lp = fs::path(label_dir) / (stem + ".labels.json");
    require_file(lp.string(), "labels");
    const auto labels = data::parse_labels(slurp(lp));
    std::map<std::int64_t, std::string> replies;
    const fs::path cp = fs::path(label_dir) / (stem + ".captions.jsonl");
    if (fs::is_regular_file(cp)) {
      std::istringstream in(slurp(cp));
      std::string line;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto c = data::parse_caption(line);
        replies[c.second] = c.text();
      }
    }
    const auto chunks = stream::read_stream(file.string());
    const auto feats = train::collect_features(
        tf, ck.vocab, chunks,
        [&](std::int64_t t) -> std::optional<std::string> {
          auto it = replies.find(t);
          if (it == replies.end()) return std::nullopt;
          return it->second;
        },
        ec, labels);
    const auto part = train::make_clips(feats, o.clip_len, o.overlap);
    clips.insert(clips.end(), part.begin(), part.end());
    spdlog::info("{}: {} seconds, {} clips", stem, chunks.size(), part.size());
  }

  const auto res = train::train_heads(ck.weights.head, ck.weights.lm, clips, tc);
  ck.weights.head = res.head;
  ck.weights.lm = res.lm;
  ckpt::save(o.out, ck);
  const fs::path curve = o.curve.empty() ? fs::path(o.out) / "loss.csv" : fs::path(o.curve);
  open_out(curve) << train::curve_csv(res.curve);
  out << fmt::format("streams={} clips={} steps={} final_total={}\n", files.size(),
                     clips.size(), o.steps,
                     res.curve.empty() ? std::string("-")
                                       : fmt::format("{:.6f}", res.curve.back().total));
}

// ------------------------------------------------------------- evaluate

void cmd_evaluate(const EvaluateOpts& o, std::ostream& out) {
  require_file(o.run, "run");
  require_file(o.gt, "ground truth");
  const auto steps = stream::read_run(o.run);

  std::vector<metrics::GtInterval> gt;
  std::int64_t horizon = 0;
  const std::string gt_text = slurp(o.gt);
  nlohmann::json gj;
  try {
    gj = nlohmann::json::parse(gt_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, o.gt + ": " + e.what());
  }
  if (gj.is_object() && gj.contains("y")) {
    const auto y = data::parse_labels(gt_text);
    gt = metrics::intervals_from_labels(y);
    horizon = static_cast<std::int64_t>(y.size());
  } else {
    gt = metrics::parse_intervals(gt_text);
  }
  std::vector<std::int64_t> speak;
  for (const auto& s : steps) {
    horizon = std::max(horizon, s.t + 1);
    const bool spoke = o.tau >= 0.0 ? model::decide(s.p, o.tau) == model::Action::kSpeak
                                    : s.action == model::Action::kSpeak;
    if (spoke) speak.push_back(s.t);
  }
  for (const auto& iv : gt) horizon = std::max(horizon, iv.b);
  const auto pred = metrics::PredTimeline::from_speak_seconds(speak);

  metrics::Report report;
  report.timediff = metrics::timediff(gt, pred, {o.delta, o.penalty}).mean;
  report.f1 = metrics::temporal_f1(gt, pred, horizon);
  if (!o.scores.empty()) {
    report.pauc = metrics::pauc(gt, metrics::read_scores(o.scores), o.omega);
  }
  const std::string text = report.to_json() + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    open_out(o.out) << text;
  }
}

// -------------------------------------------------------------- profile

void cmd_profile(ProfileOpts o, std::ostream& out) {
  require_dir(o.model, "model");
  require_file(o.stream, "stream");
  const auto ck = ckpt::load(o.model);
  const model::Transformer tf(ck.config, ck.weights);
  const auto chunks = stream::read_stream(o.stream);
  if (o.windows.empty()) o.windows.push_back(ck.config.window);
  std::vector<stream::ProfileRow> rows;
  for (int ft : o.frame_tokens) {
    for (std::int64_t ws : o.windows) {
      const auto rec = checked_run(tf, ck.vocab, chunks, engine_config(o.tau, ws, ft));
      rows.push_back(stream::profile_row(rec));
      if (!o.records.empty()) {
        auto f = open_out(fs::path(o.records) / fmt::format("run_f{}_w{}.jsonl", ft, ws));
        for (const auto& s : rec.steps) f << stream::to_json_line(s, true) << '\n';
      }
    }
  }
  out << stream::profile_table(rows);
}

// --------------------------------------------------------- layering

// Fills options that were not given on the command line, first from
// PROACT_SEED, then from the JSON config file (PROACT_CONFIG or --config).
std::vector<std::string> layer_defaults(const std::vector<std::string>& args,
                                        CLI::App& app, std::string& config_path) {
  std::vector<std::string> out(args.begin() + 1, args.end());
  std::set<std::string> given;
  std::string sub_name;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string& a = out[i];
    if (a.rfind("--", 0) == 0) {
      const auto eq = a.find('=');
      const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
      given.insert(name);
      if (name == "config") {
        config_path = eq != std::string::npos ? a.substr(eq + 1)
                      : i + 1 < out.size()    ? out[i + 1]
                                              : "";
      }
    } else if (sub_name.empty() && (i == 0 || out[i - 1] != "--config")) {
      sub_name = a;
    }
  }
  if (config_path.empty()) {
    if (const char* env = std::getenv("PROACT_CONFIG")) config_path = env;
  }
  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands({})) {
    if (s->get_name() == sub_name) sub = s;
  }
  if (sub == nullptr) return out;
  auto has = [&](const std::string& name) {
    return sub->get_option_no_throw("--" + name) != nullptr;
  };

  if (const char* env = std::getenv("PROACT_SEED");
      env != nullptr && has("seed") && !given.count("seed")) {
    out.push_back("--seed");
    out.push_back(env);
    given.insert("seed");
  }
  if (config_path.empty()) return out;

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(slurp(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, config_path + ": " + e.what());
  }
  if (!cfg.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, config_path + ": expected a JSON object");
  }
  nlohmann::json merged = nlohmann::json::object();
  for (const auto& [k, v] : cfg.items()) {
    if (!v.is_object()) merged[k] = v;
  }
  if (cfg.contains(sub_name) && cfg[sub_name].is_object()) {
    for (const auto& [k, v] : cfg[sub_name].items()) merged[k] = v;
  }
  for (const auto& [key, v] : merged.items()) {
    if (given.count(key) || !has(key)) continue;
    const std::string flag = "--" + key;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      for (const auto& e : v) {
        out.push_back(flag);
        out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      }
    } else {
      out.push_back(flag);
      out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  return out;
}

class LoggerScope {
 public:
  LoggerScope(std::ostream& err, spdlog::level::level_enum level)
      : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    sink->set_pattern("[%l] %v");
    auto logger = std::make_shared<spdlog::logger>("proact", sink);
    logger->set_level(level);
    spdlog::set_default_logger(logger);
  }
  ~LoggerScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
      return kConfigError;
    case ErrorCode::kIo:
    case ErrorCode::kParse:
      return kIoError;
    case ErrorCode::kNumeric:
      return kNumericError;
    default:
      return kFailure;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Streaming proactive-response toolkit", "proact"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_flag;
  bool verbose = false;
  bool quiet = false;
  app.add_option("--config", config_flag, "JSON config file (also PROACT_CONFIG)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  InitOpts init;
  auto* c_init = app.add_subcommand("init", "Create a random frozen model directory");
  c_init->add_option("--out", init.out, "Model directory")->required();
  c_init->add_option("--seed", init.seed, "Weight seed");
  c_init->add_option("--n-visual", init.n_visual, "Visual pseudo-token count");
  c_init->add_option("--n-event", init.n_event, "Event sub-range size");
  c_init->add_option("--window", init.window, "KV window budget");
  c_init->add_option("--corpus", init.corpus, "Extra text lines for the vocabulary");

  SynthOpts syn;
  auto* c_synth = app.add_subcommand("synth", "Write synthetic event streams");
  c_synth->add_option("--out", syn.out, "Output directory")->required();
  c_synth->add_option("--seconds", syn.seconds, "Seconds per stream");
  c_synth->add_option("--streams", syn.streams, "Number of streams");
  c_synth->add_option("--seed", syn.seed, "Seed of the first stream");
  c_synth->add_option("--prefix", syn.prefix, "File name prefix");

  PreprocessOpts pre;
  auto* c_pre = app.add_subcommand("preprocess", "ASR segments to per-second supervision");
  c_pre->add_option("input,--input", pre.input, "ASR JSONL file")->required();
  c_pre->add_option("--out", pre.out, "Output directory")->required();
  auto* pre_seed = c_pre->add_option("--seed", pre.seed, "Seed for stratified sampling");
  c_pre->add_option("--horizon", pre.horizon, "Video length in seconds");
  c_pre->add_option("--clip-len", pre.clip_len, "Clip length in seconds");
  c_pre->add_option("--overlap", pre.overlap, "Clip overlap in seconds");
  c_pre->add_option("--quotas", pre.quotas, "Clips per response-rate bin")->expected(3);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Run decide-then-generate over a stream");
  c_sim->add_option("--model", sim.model, "Model directory")->required();
  c_sim->add_option("--stream", sim.stream, "Chunk JSONL file")->required();
  c_sim->add_option("--out", sim.out, "Run JSONL output")->required();
  c_sim->add_option("--tau", sim.tau, "Response threshold");
  c_sim->add_option("--window", sim.window, "KV window (0 = model config)");
  c_sim->add_option("--frame-tokens", sim.frame_tokens, "Visual tokens per frame");
  c_sim->add_flag("--timing", sim.timing, "Record wall-clock timings");

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train", "Train the LM and response heads");
  c_train->add_option("--model", tr.model, "Model directory")->required();
  c_train->add_option("--streams", tr.streams, "Directory of *.stream.jsonl")->required();
  c_train->add_option("--labels", tr.labels, "Directory of labels/captions");
  c_train->add_option("--out", tr.out, "Output model directory")->required();
  c_train->add_option("--curve", tr.curve, "Loss CSV (default OUT/loss.csv)");
  c_train->add_option("--steps", tr.steps, "Optimizer steps");
  c_train->add_option("--alpha", tr.alpha, "Response-loss weight");
  c_train->add_option("--gamma", tr.gamma, "Transition weight");
  c_train->add_option("--lr", tr.lr, "Adam learning rate");
  c_train->add_option("--batch", tr.batch, "Clips per step");
  c_train->add_option("--seed", tr.seed, "Batch sampling seed");
  c_train->add_option("--clip-len", tr.clip_len, "Clip length in seconds");
  c_train->add_option("--overlap", tr.overlap, "Clip overlap in seconds");
  c_train->add_option("--window", tr.window, "KV window (0 = model config)");
  c_train->add_flag("--no-cls", tr.no_cls, "Drop the weighted BCE term");
  c_train->add_flag("--no-smooth", tr.no_smooth, "Drop the smoothness term");
  c_train->add_flag("--no-rate", tr.no_rate, "Drop the rate term");
  c_train->add_flag("--no-lm", tr.no_lm, "Freeze the LM head");

  EvaluateOpts ev;
  auto* c_eval = app.add_subcommand("evaluate", "TimeDiff, F1 and PAUC of a run");
  c_eval->add_option("--run", ev.run, "Run JSONL")->required();
  c_eval->add_option("--gt", ev.gt, "Intervals or labels JSON")->required();
  c_eval->add_option("--scores", ev.scores, "Judge scores JSONL");
  c_eval->add_option("--out", ev.out, "Report path (default stdout)");
  c_eval->add_option("--delta", ev.delta, "TimeDiff tolerance");
  c_eval->add_option("--penalty", ev.penalty, "TimeDiff penalty weight");
  c_eval->add_option("--omega", ev.omega, "PAUC smoothing");
  c_eval->add_option("--tau", ev.tau, "Re-threshold recorded scores");

  ProfileOpts pro;
  auto* c_prof = app.add_subcommand("profile", "Latency table over window sizes");
  c_prof->add_option("--model", pro.model, "Model directory")->required();
  c_prof->add_option("--stream", pro.stream, "Chunk JSONL file")->required();
  c_prof->add_option("--window", pro.windows, "Window sizes")->delimiter(',');
  c_prof->add_option("--frame-tokens", pro.frame_tokens, "Frame token budgets")->delimiter(',');
  c_prof->add_option("--tau", pro.tau, "Response threshold");
  c_prof->add_option("--records", pro.records, "Directory for timed run records");

  try {
    std::string config_path;
    auto argv = layer_defaults(args, app, config_path);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }

  const LoggerScope log(err, verbose ? spdlog::level::debug
                             : quiet ? spdlog::level::err
                                     : spdlog::level::warn);
  try {
    if (c_init->parsed()) cmd_init(init, out);
    if (c_synth->parsed()) cmd_synth(syn, out);
    if (c_pre->parsed()) cmd_preprocess(pre, pre_seed->count() > 0, out);
    if (c_sim->parsed()) cmd_simulate(sim, out);
    if (c_train->parsed()) cmd_train(tr, out);
    if (c_eval->parsed()) cmd_evaluate(ev, out);
    if (c_prof->parsed()) cmd_profile(pro, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace proact::cli

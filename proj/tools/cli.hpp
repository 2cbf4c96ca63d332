// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lodistort/atomic_file.hpp"
#include "lodistort/estimator.hpp"
#include "lodistort/metrics.hpp"
#include "lodistort/phase_geometry.hpp"
#include "lodistort/pipeline.hpp"
#include "lodistort/scene_sim.hpp"
#include "lodistort/spec_io.hpp"
#include "lodistort/stft.hpp"
#include "lodistort/wav.hpp"

// Command-line front end. Kept in a header so the tests can drive run()
// in-process.
namespace lodistort::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

// JSON cannot carry infinities, so they travel as strings.
inline json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

inline json toJson(const metrics::MetricsReport& r) {
  return json{{"pipelineName", r.pipelineName},
              {"refMic", r.refMic},
              {"siSdrDb", number(r.siSdrDb)},
              {"pdsAccPercent", number(r.pdsAccPercent)},
              {"pSnrDb", number(r.pSnrDb)}};
}

inline json toJson(const pipeline::PipelineParams& p) {
  return json{{"taps", p.taps},
              {"tapsFcp", p.tapsFcp},
              {"delay", p.delay},
              {"epsilon", p.epsilon},
              {"epsilonFcp", p.epsilonFcp},
              {"loading", p.loading},
              {"refMic", p.refMic},
              {"estimator", estimator::toString(p.estimator)},
              {"estErrSnrDb", number(p.estErrSnrDb)},
              {"seed", p.seed}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json readJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": invalid JSON: " + e.what());
  }
}

inline double jsonDouble(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return metrics::kInf;
    if (s == "-inf") return -metrics::kInf;
    throw InvalidArgument("config field '" + key + "' is not a number");
  }
  if (!v.is_number()) throw InvalidArgument("config field '" + key + "' is not a number");
  return v.get<double>();
}

// Overlays the "params" object of a config file onto p.
inline void applyConfigParams(const json& j, pipeline::PipelineParams& p) {
  if (!j.is_object()) throw InvalidArgument("config 'params' must be an object");
  const auto getInt = [&](const char* k, int& dst) {
    if (j.contains(k)) {
      if (!j.at(k).is_number_integer()) throw InvalidArgument(std::string("config field '") + k + "' is not an integer");
      dst = j.at(k).get<int>();
    }
  };
  getInt("taps", p.taps);
  getInt("tapsFcp", p.tapsFcp);
  getInt("delay", p.delay);
  getInt("refMic", p.refMic);
  if (j.contains("epsilon")) p.epsilon = jsonDouble(j, "epsilon");
  if (j.contains("epsilonFcp")) p.epsilonFcp = jsonDouble(j, "epsilonFcp");
  if (j.contains("loading")) p.loading = jsonDouble(j, "loading");
  if (j.contains("estErrSnrDb")) p.estErrSnrDb = jsonDouble(j, "estErrSnrDb");
  if (j.contains("estimator")) p.estimator = estimator::kindFromString(j.at("estimator").get<std::string>());
  if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
  scene_sim::SceneRecipe recipe;
  fs::path out;
  bool pcm16 = false;
};

inline void simulate(const SimulateOptions& o) {
  scene_sim::RoomSpec room;
  const scene_sim::Scene scene = scene_sim::makeScene(o.recipe, &room);
  const auto enc = o.pcm16 ? wav::Encoding::pcm16 : wav::Encoding::float32;
  const std::map<std::string, const TimeSignal*> files = {{"mixture", &scene.mixture},
                                                          {"direct", &scene.directPath},
                                                          {"reverb", &scene.reverbResidual},
                                                          {"noise", &scene.noise}};
  json paths = json::object();
  for (const auto& [key, sig] : files) {
    const std::string name = (key == "mixture" ? std::string("mix") : key) + ".wav";
    wav::write(o.out / name, *sig, enc);
    paths[key] = name;
  }
  const json manifest{{"schemaVersion", kSchemaVersion},
                      {"seed", o.recipe.seed},
                      {"mics", o.recipe.numMics},
                      {"t60Seconds", o.recipe.t60Seconds},
                      {"snrDb", o.recipe.snrDb},
                      {"durationSeconds", o.recipe.durationSeconds},
                      {"noiseSources", o.recipe.numNoiseSources},
                      {"sampleRateHz", room.sampleRateHz},
                      {"refMic", scene.refMic},
                      {"directDelaysSamples", room.directDelaySamples},
                      {"encoding", o.pcm16 ? "pcm16" : "float32"},
                      {"paths", paths}};
  writeFileAtomic(o.out / "manifest.json", dump(manifest));
}

// ---- enhance ---------------------------------------------------------------

struct EnhanceJob {
  std::optional<fs::path> sceneDir;
  std::optional<fs::path> mix;
  std::optional<fs::path> direct;
  fs::path out;
};

struct EnhanceOptions {
  std::string pipelineName;
  pipeline::PipelineParams params;
  std::optional<fs::path> estimatePath;
  std::vector<EnhanceJob> jobs;
  int threads = 1;
};

inline pipeline::PipelineInput loadInput(const EnhanceJob& job) {
  fs::path mix, direct;
  if (job.sceneDir) {
    mix = *job.sceneDir / "mix.wav";
    direct = *job.sceneDir / "direct.wav";
    const fs::path manifest = *job.sceneDir / "manifest.json";
    if (fs::exists(manifest)) {
      const json m = readJsonFile(manifest);
      if (m.contains("paths")) {
        const json& p = m.at("paths");
        if (p.contains("mixture")) mix = *job.sceneDir / p.at("mixture").get<std::string>();
        if (p.contains("direct")) direct = *job.sceneDir / p.at("direct").get<std::string>();
      }
    }
  }
  if (job.mix) mix = *job.mix;
  if (job.direct) direct = *job.direct;
  if (mix.empty()) throw InvalidArgument("enhance: need --scene or --mix");
  pipeline::PipelineInput in{wav::read(mix), std::nullopt, std::nullopt};
  if (!direct.empty() && fs::exists(direct)) in.directPath = wav::read(direct);
  else if (job.direct) throw IoError("cannot open " + direct.string());
  return in;
}

// Feature bundle: mixture channels, then the first-stage estimate at the
// reference mic, then each later stage.
inline Spectrogram featureBundle(const pipeline::PipelineResult& r, std::vector<std::string>& layout) {
  const Spectrogram& mix = r.mixture;
  const Eigen::Index extra = static_cast<Eigen::Index>(r.stages.size());
  Spectrogram b(mix.frames(), mix.bins(), mix.channels() + extra);
  for (Eigen::Index p = 0; p < mix.channels(); ++p) {
    b.setChannel(p, mix.channel(p));
    layout.push_back("mixture:" + std::to_string(p));
  }
  for (Eigen::Index k = 0; k < extra; ++k) {
    b.setChannel(mix.channels() + k, r.stages[static_cast<std::size_t>(k)].estimate);
    layout.push_back(r.stages[static_cast<std::size_t>(k)].name);
  }
  return b;
}

inline void enhanceOne(const EnhanceOptions& o, const EnhanceJob& job) {
  pipeline::PipelineInput in = loadInput(job);
  if (o.estimatePath) {
    const stft::StftConfig cfg;
    in.external = estimator::loadExternalEstimate(*o.estimatePath, cfg.numFrames(in.mixture.numSamples()),
                                                  cfg.freqBins(), in.mixture.numChannels(), o.params.refMic, cfg);
  }
  const auto spec = pipeline::parseSpec(o.pipelineName, o.params);
  const pipeline::PipelineResult r = pipeline::runPipeline(in, spec);

  json stages = json::array();
  for (const auto& st : r.stages) {
    const std::string file = st.name + ".wav";
    wav::write(job.out / file, st.waveform);
    json s{{"name", st.name}, {"wav", file}};
    if (st.report) s["metrics"] = toJson(*st.report);
    stages.push_back(s);
  }
  wav::write(job.out / "final.wav", r.final().waveform);

  std::vector<std::string> layout;
  spec_io::write(job.out / "features.ldspec", featureBundle(r, layout));

  json report{{"schemaVersion", kSchemaVersion},
              {"pipeline", r.pipeline},
              {"params", toJson(r.params)},
              {"stages", stages},
              {"final", r.final().name},
              {"features", {{"file", "features.ldspec"}, {"channels", layout}}}};
  if (r.unprocessed) report["unprocessed"] = toJson(*r.unprocessed);
  writeFileAtomic(job.out / "metrics.json", dump(report));
}

// Scenes are independent, so they may run on separate threads. Errors are
// rethrown in scene order after all workers finish.
inline void enhance(const EnhanceOptions& o) {
  pipeline::lookup(o.pipelineName);
  o.params.validate();
  const std::size_t n = o.jobs.size();
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        enhanceOne(o, o.jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(o.threads, 1)), 1, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---- evaluate --------------------------------------------------------------

inline bool isWav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

struct EvalInput {
  TimeSignal wave;
  Spectrogram spec;
};

inline EvalInput loadEval(const fs::path& p, const stft::StftConfig& cfg, Eigen::Index channel,
                          std::optional<Eigen::Index> length) {
  EvalInput e;
  if (isWav(p)) {
    const TimeSignal all = wav::read(p);
    if (channel >= all.numChannels())
      throw InvalidArgument(p.string() + ": channel " + std::to_string(channel) + " out of range");
    e.wave = all.channel(all.numChannels() == 1 ? 0 : channel);
    e.spec = stft::analyze(e.wave, cfg);
  } else {
    const Spectrogram all = spec_io::read(p);
    if (channel >= all.channels())
      throw InvalidArgument(p.string() + ": channel " + std::to_string(channel) + " out of range");
    e.spec = Spectrogram::fromChannel(all.channel(all.channels() == 1 ? 0 : channel));
    const Eigen::Index n = length.value_or(e.spec.frames() * cfg.hopSamples - cfg.padSamples());
    e.wave = stft::synthesize(e.spec, cfg, n);
  }
  return e;
}

struct EvaluateOptions {
  fs::path est, ref, mix;
  int refMic = 0;
  std::string name = "evaluate";
};

inline metrics::MetricsReport evaluate(const EvaluateOptions& o) {
  const stft::StftConfig cfg;
  const EvalInput ref = loadEval(o.ref, cfg, o.refMic, std::nullopt);
  const EvalInput mix = loadEval(o.mix, cfg, o.refMic, ref.wave.numSamples());
  const EvalInput est = loadEval(o.est, cfg, o.refMic, ref.wave.numSamples());
  if (est.wave.numSamples() != ref.wave.numSamples() || mix.wave.numSamples() != ref.wave.numSamples())
    throw InvalidArgument("evaluate: estimate, reference and mixture lengths differ (" +
                          std::to_string(est.wave.numSamples()) + ", " + std::to_string(ref.wave.numSamples()) +
                          ", " + std::to_string(mix.wave.numSamples()) + ")");
  const TfMap estQ = est.spec.channel(0), refQ = ref.spec.channel(0), mixQ = mix.spec.channel(0);
  return metrics::MetricsReport{metrics::siSdr(est.wave, ref.wave), metrics::pdsAcc(estQ, refQ, mixQ),
                                metrics::pSnr(estQ, refQ), o.name, o.refMic};
}

// ---- analyze-phase ---------------------------------------------------------

struct AnalyzePhaseOptions {
  std::optional<fs::path> sceneDir;
  int refMic = 0;
  double residualSnrDb = 0.0;
  // Single-triple mode.
  std::optional<double> magS, magV, theta;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
};

inline json analyzePhase(const AnalyzePhaseOptions& o) {
  json out{{"schemaVersion", kSchemaVersion}};
  if (o.magS || o.magV || o.theta) {
    if (!(o.magS && o.magV && o.theta)) throw InvalidArgument("analyze-phase: --mag-s, --mag-v and --theta go together");
    out["magS"] = *o.magS;
    out["magV"] = *o.magV;
    out["theta"] = *o.theta;
    out["flipProbability"] = phase_geometry::signFlipProbability(*o.magS, *o.magV, *o.theta);
    if (o.draws > 0) {
      out["draws"] = o.draws;
      out["flipMonteCarlo"] = phase_geometry::signFlipMonteCarlo(*o.magS, *o.magV, *o.theta, o.draws, o.seed);
    }
    return out;
  }
  if (!o.sceneDir) throw InvalidArgument("analyze-phase: need --scene or a --mag-s/--mag-v/--theta triple");

  const stft::StftConfig cfg;
  const TimeSignal mixWave = wav::read(*o.sceneDir / "mix.wav");
  const TimeSignal dirWave = wav::read(*o.sceneDir / "direct.wav");
  if (o.refMic < 0 || o.refMic >= mixWave.numChannels())
    throw InvalidArgument("analyze-phase: reference mic out of range");
  const TfMap y = stft::analyze(mixWave.channel(o.refMic), cfg).channel(0);
  const TfMap s = stft::analyze(dirWave.channel(o.refMic), cfg).channel(0);
  const TfMap v = y - s;
  const auto cand = phase_geometry::phaseCandidates(y, s.cwiseAbs(), v.cwiseAbs());
  const metrics::EnergyMask mask = metrics::energyMask(s);

  // With a residual at residualSnrDb below |S| in every unit, the expected
  // fraction of units whose phase-difference sign flips.
  const double ratio = std::pow(10.0, -o.residualSnrDb / 20.0);
  double sumAbs = 0.0, sumFlip = 0.0;
  Eigen::Index hitsA = 0, active = 0;
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    for (Eigen::Index f = 0; f < y.cols(); ++f) {
      if (!mask.e(t, f) || cand.degenerate(t, f)) continue;
      ++active;
      const double diff = wrapAngle(std::arg(s(t, f)) - std::arg(y(t, f)));
      sumAbs += cand.absDiff(t, f);
      hitsA += diff >= 0.0;
      const double ms = std::abs(s(t, f));
      sumFlip += phase_geometry::signFlipProbability(ms, ratio * ms, std::abs(diff));
    }
  }
  if (active == 0) throw InvalidArgument("analyze-phase: no active target units");
  const double n = static_cast<double>(active);
  out["refMic"] = o.refMic;
  out["activeUnits"] = active;
  out["meanAbsPhaseDiff"] = sumAbs / n;
  out["fractionCandidateA"] = static_cast<double>(hitsA) / n;
  out["residualSnrDb"] = o.residualSnrDb;
  out["expectedFlipRate"] = sumFlip / n;
  return out;
}

// ---- list-pipelines --------------------------------------------------------

inline json listPipelines() {
  json arr = json::array();
  for (const auto& e : pipeline::catalog())
    arr.push_back({{"name", e.name}, {"stages", e.stages}, {"multichannel", e.multichannel},
                   {"description", e.description}});
  return json{{"schemaVersion", kSchemaVersion}, {"pipelines", arr}};
}

// ---- argument parsing ------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Low-distortion multichannel dereverberation and beamforming"};
  app.require_subcommand(1);

  SimulateOptions sim;
  std::string simOut;
  auto* simCmd = app.add_subcommand("simulate", "Render a seeded synthetic reverberant scene");
  simCmd->add_option("--mics", sim.recipe.numMics, "Microphone count")->capture_default_str()->check(CLI::Range(1, 64));
  simCmd->add_option("--t60", sim.recipe.t60Seconds, "Reverberation time in seconds")->capture_default_str()
      ->check(CLI::Range(0.0, 5.0));
  simCmd->add_option("--snr-db", sim.recipe.snrDb, "Direct-path to noise ratio at the reference mic")
      ->capture_default_str();
  simCmd->add_option("--seconds", sim.recipe.durationSeconds, "Duration")->capture_default_str()
      ->check(CLI::Range(0.1, 600.0));
  simCmd->add_option("--noises", sim.recipe.numNoiseSources, "Number of noise sources")->capture_default_str()
      ->check(CLI::Range(0, 16));
  simCmd->add_option("--seed", sim.recipe.seed, "Random seed")->capture_default_str();
  simCmd->add_flag("--pcm16", sim.pcm16, "Write 16-bit PCM instead of float32");
  simCmd->add_option("--out", simOut, "Output directory")->required();

  EnhanceOptions enh;
  std::string pipelineName, configPath, estimatorName, estimatePath, outDir, mixPath, directPath;
  std::vector<std::string> scenes;
  auto* enhCmd = app.add_subcommand("enhance", "Run a named pipeline on one or more scenes");
  auto* optPipeline = enhCmd->add_option("--pipeline", pipelineName, "Pipeline name (see list-pipelines)");
  enhCmd->add_option("--scene", scenes, "Scene directory (repeatable)");
  enhCmd->add_option("--mix", mixPath, "Mixture WAV (instead of --scene)");
  enhCmd->add_option("--direct", directPath, "Direct-path WAV for oracle estimators and scoring");
  auto* optOut = enhCmd->add_option("--out", outDir, "Output directory");
  enhCmd->add_option("--config", configPath, "JSON config {pipeline, params, scene(s), out}");
  auto* optTaps = enhCmd->add_option("--taps", enh.params.taps, "WPE taps K (0 = by mic count)");
  auto* optTapsFcp = enhCmd->add_option("--taps-fcp", enh.params.tapsFcp, "FCP taps")->capture_default_str();
  auto* optDelay = enhCmd->add_option("--delay", enh.params.delay, "Prediction delay")->capture_default_str();
  auto* optEps = enhCmd->add_option("--epsilon", enh.params.epsilon, "PSD floor")->capture_default_str();
  auto* optEpsFcp = enhCmd->add_option("--epsilon-fcp", enh.params.epsilonFcp, "FCP weight floor")
                        ->capture_default_str();
  auto* optLoading = enhCmd->add_option("--loading", enh.params.loading, "Relative diagonal loading")
                         ->capture_default_str();
  auto* optRef = enhCmd->add_option("--ref-mic", enh.params.refMic, "Reference microphone")->capture_default_str();
  auto* optEstimator = enhCmd->add_option("--estimator", estimatorName,
                                          "oracleDirect, oracleMagMask, oraclePhaseSensitiveMask, corrupted, external");
  enhCmd->add_option("--estimate", estimatePath, "External first-stage estimate (.wav or LDSPEC1)");
  auto* optErr = enhCmd->add_option("--est-err-snr-db", enh.params.estErrSnrDb, "Corruption SNR of the estimate");
  auto* optSeed = enhCmd->add_option("--seed", enh.params.seed, "Seed for estimate corruption")->capture_default_str();
  enhCmd->add_option("--jobs", enh.threads, "Scenes processed in parallel")->capture_default_str()
      ->check(CLI::Range(1, 256));

  EvaluateOptions ev;
  std::string evEst, evRef, evMix;
  auto* evCmd = app.add_subcommand("evaluate", "Score an estimate against a direct-path reference");
  evCmd->add_option("--est", evEst, "Estimate (.wav or LDSPEC1)")->required();
  evCmd->add_option("--ref", evRef, "Direct-path reference (.wav or LDSPEC1)")->required();
  evCmd->add_option("--mix", evMix, "Mixture (.wav or LDSPEC1)")->required();
  evCmd->add_option("--ref-mic", ev.refMic, "Channel used from multichannel files")->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  AnalyzePhaseOptions ap;
  std::string apScene;
  double magS = 0, magV = 0, theta = 0;
  auto* apCmd = app.add_subcommand("analyze-phase", "Phase-candidate and sign-flip statistics");
  apCmd->add_option("--scene", apScene, "Scene directory");
  apCmd->add_option("--ref-mic", ap.refMic, "Reference microphone")->capture_default_str();
  apCmd->add_option("--residual-snr-db", ap.residualSnrDb, "Residual level relative to |S| per unit")
      ->capture_default_str();
  auto* optMagS = apCmd->add_option("--mag-s", magS, "|S| for a single triple")->check(CLI::NonNegativeNumber);
  auto* optMagV = apCmd->add_option("--mag-v", magV, "Residual magnitude")->check(CLI::NonNegativeNumber);
  auto* optTheta = apCmd->add_option("--theta", theta, "Angle between S and Y in radians");
  apCmd->add_option("--draws", ap.draws, "Monte-Carlo draws (0 = none)")->check(CLI::NonNegativeNumber);
  apCmd->add_option("--seed", ap.seed, "Monte-Carlo seed");

  auto* lpCmd = app.add_subcommand("list-pipelines", "Print the pipeline catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simCmd) {
      sim.out = simOut;
      simulate(sim);
    } else if (*enhCmd) {
      json cfg = json::object();
      if (!configPath.empty()) cfg = readJsonFile(configPath);
      pipeline::PipelineParams fromFlags = enh.params;
      enh.params = pipeline::PipelineParams{};
      if (cfg.contains("params")) applyConfigParams(cfg.at("params"), enh.params);
      // Flags given on the command line override the config file.
      if (optTaps->count()) enh.params.taps = fromFlags.taps;
      if (optTapsFcp->count()) enh.params.tapsFcp = fromFlags.tapsFcp;
      if (optDelay->count()) enh.params.delay = fromFlags.delay;
      if (optEps->count()) enh.params.epsilon = fromFlags.epsilon;
      if (optEpsFcp->count()) enh.params.epsilonFcp = fromFlags.epsilonFcp;
      if (optLoading->count()) enh.params.loading = fromFlags.loading;
      if (optRef->count()) enh.params.refMic = fromFlags.refMic;
      if (optErr->count()) enh.params.estErrSnrDb = fromFlags.estErrSnrDb;
      if (optSeed->count()) enh.params.seed = fromFlags.seed;
      if (optEstimator->count()) enh.params.estimator = estimator::kindFromString(estimatorName);

      enh.pipelineName = optPipeline->count() ? pipelineName : cfg.value("pipeline", std::string{});
      if (enh.pipelineName.empty()) throw InvalidArgument("enhance: --pipeline is required");
      if (estimatePath.empty() && cfg.contains("estimate")) estimatePath = cfg.at("estimate").get<std::string>();
      if (!estimatePath.empty()) {
        enh.estimatePath = estimatePath;
        if (!optEstimator->count() && !(cfg.contains("params") && cfg.at("params").contains("estimator")))
          enh.params.estimator = estimator::EstimateKind::external;
      }
      const std::string outRoot = optOut->count() ? outDir : cfg.value("out", std::string{});
      if (outRoot.empty()) throw InvalidArgument("enhance: --out is required");
      if (scenes.empty()) {
        if (cfg.contains("scene")) scenes.push_back(cfg.at("scene").get<std::string>());
        if (cfg.contains("scenes")) scenes = cfg.at("scenes").get<std::vector<std::string>>();
      }
      if (mixPath.empty() && cfg.contains("mix")) mixPath = cfg.at("mix").get<std::string>();
      if (directPath.empty() && cfg.contains("direct")) directPath = cfg.at("direct").get<std::string>();

      if (!mixPath.empty()) {
        if (!scenes.empty()) throw InvalidArgument("enhance: use either --scene or --mix, not both");
        EnhanceJob job{std::nullopt, fs::path(mixPath), std::nullopt, outRoot};
        if (!directPath.empty()) job.direct = fs::path(directPath);
        enh.jobs.push_back(job);
      } else if (scenes.size() == 1) {
        enh.jobs.push_back({fs::path(scenes[0]), std::nullopt, std::nullopt, outRoot});
      } else if (!scenes.empty()) {
        // Several scenes: one output subdirectory per scene name.
        for (const auto& s : scenes) {
          const fs::path dir = fs::path(s).lexically_normal();
          const fs::path leaf = dir.filename().empty() ? dir.parent_path().filename() : dir.filename();
          enh.jobs.push_back({dir, std::nullopt, std::nullopt, fs::path(outRoot) / leaf});
        }
      } else {
        throw InvalidArgument("enhance: need --scene or --mix");
      }
      enhance(enh);
    } else if (*evCmd) {
      ev.est = evEst;
      ev.ref = evRef;
      ev.mix = evMix;
      json j = toJson(evaluate(ev));
      j["schemaVersion"] = kSchemaVersion;
      out << dump(j);
    } else if (*apCmd) {
      if (!apScene.empty()) ap.sceneDir = fs::path(apScene);
      if (optMagS->count()) ap.magS = magS;
      if (optMagV->count()) ap.magV = magV;
      if (optTheta->count()) ap.theta = theta;
      out << dump(analyzePhase(ap));
    } else if (*lpCmd) {
      out << dump(listPipelines());
    }
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}

}  // namespace lodistort::cli

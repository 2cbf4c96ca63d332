// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lodistort/beamform.hpp"
#include "lodistort/estimator.hpp"
#include "lodistort/linpred.hpp"
#include "lodistort/metrics.hpp"
#include "lodistort/statistics.hpp"
#include "lodistort/stft.hpp"
#include "lodistort/types.hpp"

// Named compositions of estimator, statistics, beamformers and prediction
// filters. Every intermediate estimate is kept and, when the direct-path
// reference is known, scored.
namespace lodistort::pipeline {

struct CatalogEntry {
  std::string name;
  std::vector<std::string> stages;
  bool multichannel;  // needs P >= 2
  std::string description;
};

inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"wpe", {"estimator", "wpe"}, false,
       "WPE over all mics with the PSD of the reference-mic estimate; output at the reference mic"},
      {"fcp", {"estimator", "fcp"}, false, "monaural FCP of the reference-mic mixture"},
      {"fcp_wpe", {"estimator", "wpe", "fcp"}, false, "monaural WPE, then FCP with the WPE output as reference"},
      {"mvdr", {"estimator", "mvdr"}, true,
       "MVDR from target/non-target covariances of a multichannel estimate, applied to the mixture"},
      {"mmvdr", {"estimator", "mmvdr"}, true, "mask-based MVDR applied to the mixture"},
      {"mmvdr_wpe", {"estimator", "wpe", "mmvdr"}, true, "mask-based MVDR applied to the multichannel WPE output"},
      {"mwmpdr_wpe", {"estimator", "wpe", "mwmpdr"}, true,
       "factorized convolutional beamformer: WPE then mask-steered WMPDR"},
      {"mcwf_wpe", {"estimator", "wpe", "mcwf"}, true, "multichannel Wiener filter on the WPE output"},
      {"fcp_mwmpdr_wpe", {"estimator", "wpe", "mwmpdr", "fcp"}, true,
       "FCP with the mWMPDR_WPE output as reference"},
      {"gev", {"estimator", "gev"}, true, "GEV beamformer with blind analytic normalization"},
      {"mcwf", {"estimator", "mcwf"}, true, "multichannel Wiener filter on the mixture"},
  };
  return entries;
}

inline std::string validNames() {
  std::string s;
  for (const auto& e : catalog()) s += (s.empty() ? "" : ", ") + e.name;
  return s;
}

inline const CatalogEntry& lookup(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  throw InvalidArgument("unknown pipeline '" + name + "' (valid: " + validNames() + ")");
}

struct PipelineParams {
  int taps = 0;  // 0 selects the default for the microphone count
  int tapsFcp = linpred::kDefaultFcpTaps;
  int delay = linpred::kDefaultDelay;
  double epsilon = statistics::kDefaultEpsilon;
  double epsilonFcp = linpred::kDefaultFcpEpsilon;
  double loading = beamform::kDefaultLoading;
  int refMic = 0;
  estimator::EstimateKind estimator = estimator::EstimateKind::oracleDirect;
  double estErrSnrDb = estimator::kNoCorruption;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(taps >= 0, "taps must be >= 0 (0 = default)");
    detail::require(tapsFcp >= 1, "FCP taps must be >= 1");
    detail::require(delay >= 1, "prediction delay must be >= 1");
    detail::require(epsilon > 0.0 && epsilonFcp > 0.0, "floors must be positive");
    detail::require(loading >= 0.0, "loading must be nonnegative");
    detail::require(refMic >= 0, "reference mic must be nonnegative");
  }
};

struct PipelineSpec {
  std::string name;
  PipelineParams params;
};

inline PipelineSpec parseSpec(const std::string& name, const PipelineParams& params = {}) {
  lookup(name);
  params.validate();
  return {name, params};
}

struct PipelineInput {
  TimeSignal mixture;
  std::optional<TimeSignal> directPath;               // needed by oracle estimators and scoring
  std::optional<estimator::TargetEstimate> external;  // needed by the external estimator
};

struct StageOutput {
  std::string name;
  TfMap estimate;  // at the reference mic
  TimeSignal waveform;
  std::optional<metrics::MetricsReport> report;
};

struct PipelineResult {
  std::string pipeline;
  PipelineParams params;
  Spectrogram mixture;
  estimator::TargetEstimate firstStage;
  std::vector<StageOutput> stages;  // in execution order, final last
  std::optional<metrics::MetricsReport> unprocessed;

  const StageOutput& final() const { return stages.back(); }
  const StageOutput& stage(const std::string& name) const {
    for (const auto& s : stages)
      if (s.name == name) return s;
    throw InvalidArgument("pipeline result has no stage '" + name + "'");
  }
};

namespace detail {

template <typename Fn>
auto runStage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError("stage '" + stage + "': " + e.what());
  } catch (const IoError& e) {
    throw IoError("stage '" + stage + "': " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("stage '" + stage + "': " + e.what());
  }
}

inline Spectrogram takeChannel(const Spectrogram& s, Eigen::Index p) { return Spectrogram::fromChannel(s.channel(p)); }

}  // namespace detail

inline estimator::TargetEstimate firstStageEstimate(const Spectrogram& mixture, const PipelineInput& in,
                                                    const PipelineParams& params,
                                                    const stft::StftConfig& cfg) {
  using estimator::EstimateKind;
  switch (params.estimator) {
    case EstimateKind::external:
      if (!in.external) throw InvalidArgument("estimator 'external' requires an estimate file");
      if (in.external->spec.frames() != mixture.frames() || in.external->spec.bins() != mixture.bins())
        throw InvalidArgument("external estimate " + in.external->spec.shapeString() +
                              " does not match mixture " + mixture.shapeString());
      return estimator::TargetEstimate{in.external->spec, EstimateKind::external, params.refMic};
    case EstimateKind::corrupted:
    case EstimateKind::oracleDirect:
    case EstimateKind::oracleMagMask:
    case EstimateKind::oraclePhaseSensitiveMask: {
      if (!in.directPath) throw InvalidArgument("oracle estimators require the direct-path reference");
      const Spectrogram target = stft::analyze(*in.directPath, cfg);
      const auto kind = params.estimator == EstimateKind::corrupted ? EstimateKind::oracleDirect : params.estimator;
      auto est = estimator::oracleEstimate(mixture, target, kind, params.refMic);
      if (params.estimator == EstimateKind::corrupted || std::isfinite(params.estErrSnrDb))
        est = estimator::corruptEstimate(est, params.estErrSnrDb, params.seed);
      return est;
    }
  }
  throw InvalidArgument("unsupported estimator kind");
}

inline PipelineResult runPipeline(const PipelineInput& in, const PipelineSpec& spec,
                                  const stft::StftConfig& cfg = {}) {
  const CatalogEntry& entry = lookup(spec.name);
  const PipelineParams& prm = spec.params;
  prm.validate();
  in.mixture.validate();
  const Eigen::Index mics = in.mixture.numChannels();
  const int q = prm.refMic;
  if (q >= mics)
    throw InvalidArgument("reference mic " + std::to_string(q) + " out of range for " + std::to_string(mics) +
                          "-channel input");
  if (entry.multichannel && mics < 2)
    throw InvalidArgument("pipeline '" + spec.name + "' needs at least 2 channels, input has " +
                          std::to_string(mics));
  if (in.directPath && (in.directPath->numSamples() != in.mixture.numSamples() ||
                        in.directPath->numChannels() != mics))
    throw InvalidArgument("direct-path reference does not match the mixture shape");

  PipelineResult res;
  res.pipeline = spec.name;
  res.params = prm;
  res.mixture = detail::runStage("stft", [&] { return stft::analyze(in.mixture, cfg); });
  res.firstStage = detail::runStage("estimator", [&] { return firstStageEstimate(res.mixture, in, prm, cfg); });
  const TfMap mixQ = res.mixture.channel(q);
  const TfMap estQ = res.firstStage.atRef();
  res.stages.push_back({"estimator", estQ, {}, {}});

  const auto push = [&](const std::string& name, TfMap est) { res.stages.push_back({name, std::move(est), {}, {}}); };
  const auto psd = [&] { return statistics::psdFloor(estQ, prm.epsilon); };
  const auto tapsFor = [&](Eigen::Index p) { return prm.taps > 0 ? prm.taps : linpred::defaultWpeTaps(p); };
  const auto requireFullEstimate = [&] {
    if (res.firstStage.spec.channels() != mics)
      throw InvalidArgument("pipeline '" + spec.name + "' needs a " + std::to_string(mics) +
                            "-channel target estimate, got " + std::to_string(res.firstStage.spec.channels()));
  };
  // Multichannel WPE output, shared by the cascades.
  const auto wpeField = [&] {
    return detail::runStage("wpe", [&] {
      return linpred::wpeAllChannels(res.mixture, psd(), tapsFor(mics), prm.delay, prm.loading).dereverbed;
    });
  };
  // Steering from mask-weighted target covariance of the WPE field.
  const auto maskedSteering = [&](const Spectrogram& field) {
    auto cov = statistics::maskedCovariances(field, statistics::computeMask(estQ, field.channel(q)));
    cov.steering = statistics::steeringVector(cov.phiS, q).steering;
    return cov;
  };
  const auto mwmpdrOn = [&](const Spectrogram& field) {
    return detail::runStage("mwmpdr", [&] {
      const auto cov = maskedSteering(field);
      const auto phiY = statistics::psdWeightedCovariance(field, psd());
      return beamform::applyBeamformer(beamform::wmpdr(phiY, *cov.steering, q, prm.loading), field);
    });
  };

  const std::string& n = spec.name;
  if (n == "wpe") {
    push("wpe", detail::runStage("wpe", [&] {
           return linpred::wpe(res.mixture, psd(), tapsFor(mics), prm.delay, q, prm.loading).dereverbed;
         }));
  } else if (n == "fcp") {
    push("fcp", detail::runStage("fcp", [&] {
           return linpred::fcp(mixQ, estQ, prm.tapsFcp, prm.epsilonFcp, prm.loading).dereverbed;
         }));
  } else if (n == "fcp_wpe") {
    const TfMap w = detail::runStage("wpe", [&] {
      return linpred::wpe(detail::takeChannel(res.mixture, q), psd(), tapsFor(1), prm.delay, 0, prm.loading)
          .dereverbed;
    });
    push("wpe", w);
    push("fcp_wpe", detail::runStage("fcp", [&] {
           return linpred::fcp(w, estQ, prm.tapsFcp, prm.epsilonFcp, prm.loading).dereverbed;
         }));
  } else if (n == "mvdr" || n == "gev") {
    requireFullEstimate();
    auto cov = detail::runStage("statistics", [&] { return statistics::signalCovariances(res.mixture, res.firstStage.spec); });
    if (n == "mvdr") {
      push("mvdr", detail::runStage("mvdr", [&] {
             cov.steering = statistics::steeringVector(cov.phiS, q).steering;
             return beamform::applyBeamformer(beamform::mvdr(cov, q, prm.loading), res.mixture);
           }));
    } else {
      push("gev", detail::runStage("gev", [&] {
             return beamform::applyBeamformer(beamform::gevBan(cov, q, prm.loading), res.mixture);
           }));
    }
  } else if (n == "mmvdr") {
    push("mmvdr", detail::runStage("mmvdr", [&] {
           auto cov = statistics::maskedCovariances(res.mixture, statistics::computeMask(estQ, mixQ));
           cov.steering = statistics::steeringVector(cov.phiS, q).steering;
           return beamform::applyBeamformer(beamform::mvdr(cov, q, prm.loading), res.mixture);
         }));
  } else if (n == "mmvdr_wpe") {
    const Spectrogram field = wpeField();
    push("wpe", field.channel(q));
    push("mmvdr_wpe", detail::runStage("mmvdr", [&] {
           return beamform::applyBeamformer(beamform::mvdr(maskedSteering(field), q, prm.loading), field);
         }));
  } else if (n == "mwmpdr_wpe" || n == "fcp_mwmpdr_wpe") {
    const Spectrogram field = wpeField();
    push("wpe", field.channel(q));
    const TfMap bf = mwmpdrOn(field);
    push("mwmpdr_wpe", bf);
    if (n == "fcp_mwmpdr_wpe")
      push("fcp_mwmpdr_wpe", detail::runStage("fcp", [&] {
             return linpred::fcp(bf, estQ, prm.tapsFcp, prm.epsilonFcp, prm.loading).dereverbed;
           }));
  } else if (n == "mcwf_wpe") {
    const Spectrogram field = wpeField();
    push("wpe", field.channel(q));
    push("mcwf_wpe", detail::runStage("mcwf", [&] {
           return beamform::applyBeamformer(beamform::mcwf(field, estQ, q, prm.loading), field);
         }));
  } else if (n == "mcwf") {
    push("mcwf", detail::runStage("mcwf", [&] {
           return beamform::applyBeamformer(beamform::mcwf(res.mixture, estQ, q, prm.loading), res.mixture);
         }));
  }

  const Eigen::Index len = in.mixture.numSamples();
  for (auto& st : res.stages) st.waveform = stft::synthesize(Spectrogram::fromChannel(st.estimate), cfg, len);

  if (in.directPath) {
    const TfMap targetQ = stft::analyze(in.directPath->channel(q), cfg).channel(0);
    const TimeSignal refWave = in.directPath->channel(q);
    const auto score = [&](const std::string& name, const TfMap& est, const TimeSignal& wave) {
      return metrics::MetricsReport{metrics::siSdr(wave, refWave), metrics::pdsAcc(est, targetQ, mixQ),
                                    metrics::pSnr(est, targetQ), name, q};
    };
    for (auto& st : res.stages) st.report = score(st.name, st.estimate, st.waveform);
    res.unprocessed = score("unprocessed", mixQ, in.mixture.channel(q));
  }
  return res;
}

}  // namespace lodistort::pipeline

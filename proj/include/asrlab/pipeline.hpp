#pragma once

// End-to-end experiments: corpus -> features -> SOM -> MLP -> word HMM ->
// (GA) -> decode -> score, with every intermediate artifact persisted.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "asrlab/artifacts.hpp"
#include "asrlab/corpus.hpp"
#include "asrlab/decoder.hpp"
#include "asrlab/error.hpp"
#include "asrlab/eval.hpp"
#include "asrlab/frontend.hpp"
#include "asrlab/ga.hpp"
#include "asrlab/mlp.hpp"
#include "asrlab/rng.hpp"
#include "asrlab/som.hpp"

namespace asrlab {

struct ExperimentConfig {
  std::optional<std::filesystem::path> manifest;  // unset: synthesise `synth`
  SynthSpec synth;
  bool resplit = false;  // re-split a manifest that already carries splits
  SplitConfig split{0.8, 0.125, 0};
  FrontendConfig frontend;
  SomConfig som;
  MlpConfig mlp;
  GaConfig ga;
  bool ga_enabled = true;
  SomEncoding encoding = SomEncoding::Soft;
  double hmm_smoothing = 1.0;
  std::filesystem::path out_dir = "asrlab_run";
  std::uint64_t seed = 7;
  // Fixes the (unnamed) stage seeds below when false; tests can pin them.
  bool derive_stage_seeds = true;

  std::string system_name() const { return "sys" + std::to_string(som.k_units); }
};

// Adds the stage name to any library error escaping a pipeline stage.
template <typename F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw e.in_stage(stage);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, e.what()).in_stage(stage);
  }
}

inline ExperimentConfig with_stage_seeds(ExperimentConfig cfg) {
  if (!cfg.derive_stage_seeds) return cfg;
  cfg.synth.seed = derive_seed(cfg.seed, "synth");
  cfg.split.seed = derive_seed(cfg.seed, "split");
  cfg.som.seed = derive_seed(cfg.seed, "som");
  cfg.mlp.seed = derive_seed(cfg.seed, "mlp");
  cfg.ga.seed = derive_seed(cfg.seed, "ga");
  return cfg;
}

struct PreparedCorpus {
  CorpusManifest manifest;
  FeatureSet features;
};

// Resolves (or synthesises) the corpus, assigns splits when needed, extracts
// features, and writes manifest.csv / features.csv under out_dir.
inline PreparedCorpus prepare_corpus(const ExperimentConfig& config) {
  const auto cfg = with_stage_seeds(config);
  std::filesystem::create_directories(cfg.out_dir);
  PreparedCorpus pc;
  pc.manifest = run_stage("synth", [&] {
    if (cfg.manifest) return load_manifest(*cfg.manifest);
    return synth_corpus(cfg.synth, cfg.out_dir / "corpus");
  });
  const bool has_split = std::any_of(pc.manifest.records.begin(), pc.manifest.records.end(),
                                     [](const UtteranceRecord& r) { return r.split != Split::None; });
  if (!has_split || cfg.resplit) {
    const auto base = pc.manifest.base_dir;
    pc.manifest = run_stage("split", [&] { return split_corpus(pc.manifest, cfg.split); });
    pc.manifest.base_dir = base;
  }
  // Audio paths are rewritten relative to out_dir so the saved manifest resolves.
  CorpusManifest saved = pc.manifest;
  for (auto& r : saved.records)
    r.audio_path = std::filesystem::relative(pc.manifest.resolve(r), cfg.out_dir).generic_string();
  run_stage("split", [&] { save_manifest(cfg.out_dir / "manifest.csv", saved); });

  pc.features = run_stage("extract", [&] { return extract_features(pc.manifest, cfg.frontend); });
  run_stage("extract", [&] { io::write_text(cfg.out_dir / "features.csv", features_csv(pc.features)); });
  return pc;
}

inline std::vector<std::vector<int>> label_sequences(const CorpusManifest& m, Split split) {
  std::vector<std::vector<int>> out;
  for (const auto& seq : sequences_by_speaker(m, split)) {
    std::vector<int> labels;
    for (std::size_t r : seq.record_indices) labels.push_back(m.records[r].word_id);
    out.push_back(std::move(labels));
  }
  return out;
}

inline std::vector<int> split_labels(const CorpusManifest& m, Split split) {
  std::vector<int> out;
  for (const auto& r : m.records)
    if (r.split == split) out.push_back(r.word_id);
  return out;
}

inline std::vector<std::size_t> split_records(const CorpusManifest& m, Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].split == split) out.push_back(i);
  return out;
}

inline SomCodebook train_som_stage(const FeatureSet& features, const CorpusManifest& m, const SomConfig& cfg) {
  return som_train(features.rows_for(m, split_records(m, Split::Train)), cfg);
}

inline MlpTrainResult train_mlp_stage(const FeatureSet& features, const CorpusManifest& m, const SomCodebook& som,
                                      MlpConfig cfg, SomEncoding encoding) {
  const auto records = split_records(m, Split::Train);
  const auto inputs = som_encode_all(som, features.rows_for(m, records), encoding);
  cfg.n_input = static_cast<int>(som.units());
  cfg.n_output = static_cast<int>(m.vocab_size());
  return mlp_train(inputs, split_labels(m, Split::Train), cfg);
}

inline PosteriorTable posteriors_for(const FeatureSet& features, const CorpusManifest& m, const SomCodebook& som,
                                     const MlpModel& mlp, Split split, SomEncoding encoding) {
  const auto records = split_records(m, split);
  PosteriorTable t;
  for (std::size_t r : records) t.ids.push_back(m.records[r].utterance_id());
  t.posteriors = records.empty() ? Matrix(0, mlp.n_output())
                                 : mlp_posteriors(mlp, som_encode_all(som, features.rows_for(m, records), encoding));
  return t;
}

// Dev sequences (one per speaker, manifest order) from a posterior table.
inline std::vector<DevSequence> dev_sequences(const CorpusManifest& m, const PosteriorTable& table, Split split) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < table.ids.size(); ++i) idx.emplace(table.ids[i], i);
  std::vector<DevSequence> out;
  for (const auto& seq : sequences_by_speaker(m, split)) {
    DevSequence d;
    d.posteriors = Matrix(0, table.posteriors.cols());
    for (std::size_t r : seq.record_indices) {
      const auto id = m.records[r].utterance_id();
      const auto it = idx.find(id);
      require(it != idx.end(), ErrorCode::UnknownUtterance, "no posteriors for '" + id + "'");
      d.posteriors.append_row(table.posteriors.row(it->second));
      d.truth.push_back(m.records[r].word_id);
    }
    out.push_back(std::move(d));
  }
  return out;
}

// Viterbi-decodes each speaker's utterances of `split` as one word sequence.
inline std::vector<DecodedUtterance> decode_split(const FeatureSet& features, const CorpusManifest& m,
                                                  const SomCodebook& som, const MlpModel& mlp, const WordHmm& hmm,
                                                  Split split, SomEncoding encoding) {
  std::vector<DecodedUtterance> out;
  for (const auto& seq : sequences_by_speaker(m, split)) {
    const auto res = decode_utterance_sequence(mlp, som, hmm, features.rows_for(m, seq.record_indices), encoding);
    for (std::size_t t = 0; t < seq.record_indices.size(); ++t) {
      const int w = res.word_indices[t];
      const std::string text =
          static_cast<std::size_t>(w) < m.vocabulary.size() ? m.vocabulary[static_cast<std::size_t>(w)] : "";
      out.push_back({m.records[seq.record_indices[t]].utterance_id(), w, text, res.path_scores[t]});
    }
  }
  return out;
}

inline EvalReport score_decoded(const std::vector<DecodedUtterance>& decoded, const CorpusManifest& m,
                                const std::string& system) {
  std::vector<ScoredDecode> scored;
  for (const auto& d : decoded) scored.push_back({d.utterance_id, d.word_id});
  return score_decodes(scored, m, system);
}

struct ExperimentOutcome {
  std::vector<EvalReport> reports;  // baseline, then +GA when enabled
  double baseline_dev_fitness = 0.0;
  double ga_dev_fitness = 0.0;
  std::vector<FitnessRecord> ga_history;
  double som_initial_qe = 0.0;
  double som_final_qe = 0.0;
  std::vector<double> mlp_losses;
};

// Trains and evaluates one sysK (and sysK+GA) on a prepared corpus, writing
// its artifacts to cfg.out_dir.
inline ExperimentOutcome run_system(const PreparedCorpus& corpus, const ExperimentConfig& config) {
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::duration d) { return std::chrono::duration<double>(d).count(); };
  const auto cfg = with_stage_seeds(config);
  const auto& m = corpus.manifest;
  const auto& fs = corpus.features;
  const auto& dir = cfg.out_dir;
  std::filesystem::create_directories(dir);
  ExperimentOutcome out;
  StageTiming timing;

  const auto t0 = Clock::now();
  const auto som = run_stage("train-som", [&] {
    auto res = som_train_detailed(fs.rows_for(m, split_records(m, Split::Train)), cfg.som);
    out.som_initial_qe = res.initial_quantization_error;
    out.som_final_qe = res.final_quantization_error;
    save_codebook(dir / "som.model", res.codebook);
    io::write_text(dir / "som.csv", codebook_csv(res.codebook));
    return res.codebook;
  });
  const auto t1 = Clock::now();
  const auto mlp = run_stage("train-mlp", [&] {
    auto res = train_mlp_stage(fs, m, som, cfg.mlp, cfg.encoding);
    out.mlp_losses = res.epoch_losses;
    save_mlp(dir / "mlp.model", res.model);
    io::write_text(dir / "mlp_loss.csv", loss_history_csv(res.epoch_losses));
    return res.model;
  });
  const auto t2 = Clock::now();
  timing.som_seconds = seconds(t1 - t0);
  timing.mlp_seconds = seconds(t2 - t1);
  timing.total_seconds = seconds(t2 - t0);

  const auto hmm = run_stage("build-hmm", [&] {
    auto h = build_word_hmm(label_sequences(m, Split::Train), m.vocab_size(), cfg.hmm_smoothing);
    save_hmm(dir / "hmm.model", h);
    io::write_text(dir / "hmm.csv", hmm_csv(h));
    return h;
  });

  const std::string name = cfg.system_name();
  run_stage("decode", [&] {
    const auto decoded = decode_split(fs, m, som, mlp, hmm, Split::Test, cfg.encoding);
    io::write_text(dir / "decoded.csv", decoded_csv(decoded));
    out.reports.push_back(score_decoded(decoded, m, name));
    out.reports.back().timing = timing;
  });

  const bool has_dev = !split_records(m, Split::Dev).empty();
  if (cfg.ga_enabled) {
    run_stage("optimize-ga", [&] {
      require(has_dev, ErrorCode::PreconditionFailed, "GA needs a dev split");
      const auto table = posteriors_for(fs, m, som, mlp, Split::Dev, cfg.encoding);
      io::write_text(dir / "posteriors_dev.csv", posteriors_csv(table));
      const auto ga = evolve(dev_sequences(m, table, Split::Dev), hmm, cfg.ga);
      out.baseline_dev_fitness = ga.baseline_fitness;
      out.ga_dev_fitness = ga.best_fitness;
      out.ga_history = ga.history;
      save_hmm(dir / "hmm_ga.model", ga.best);
      io::write_text(dir / "ga_history.csv", ga_history_csv(ga.history));
      const auto decoded = decode_split(fs, m, som, mlp, ga.best, Split::Test, cfg.encoding);
      io::write_text(dir / "decoded_ga.csv", decoded_csv(decoded));
      out.reports.push_back(score_decoded(decoded, m, name + "+GA"));
      out.reports.back().timing = timing;
    });
  }

  run_stage("evaluate", [&] {
    io::write_text(dir / "report.csv", render_report(out.reports, ReportFormat::Csv));
    io::write_text(dir / "report.txt", render_report(out.reports, ReportFormat::Text));
    io::write_text(dir / "report.svg", render_svg(out.reports));
    io::write_text(dir / "timing.csv", render_report(out.reports, ReportFormat::Csv, true));
  });
  return out;
}

inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) { return run_system(prepare_corpus(cfg), cfg); }

enum class GaMode { Off, On, Both };

struct GridOutcome {
  std::vector<EvalReport> reports;  // in table column order
  std::vector<ExperimentOutcome> systems;
};

// One shared corpus and feature set; sysK results under out_dir/sysK and the
// merged comparison table (baselines first, then +GA) at out_dir/comparison.*.
inline GridOutcome run_grid(const ExperimentConfig& base, const std::vector<int>& k_list, GaMode mode) {
  require(!k_list.empty(), ErrorCode::InvalidConfig, "grid: empty K list");
  const auto corpus = prepare_corpus(base);
  GridOutcome grid;
  std::vector<EvalReport> baselines, optimised;
  for (int k : k_list) {
    ExperimentConfig cfg = base;
    cfg.som.k_units = k;
    cfg.som.grid_rows = cfg.som.grid_cols = 0;
    cfg.ga_enabled = mode != GaMode::Off;
    cfg.out_dir = base.out_dir / cfg.system_name();
    auto outcome = run_system(corpus, cfg);
    if (mode != GaMode::On) baselines.push_back(outcome.reports.front());
    if (mode != GaMode::Off) optimised.push_back(outcome.reports.back());
    grid.systems.push_back(std::move(outcome));
  }
  grid.reports = baselines;
  grid.reports.insert(grid.reports.end(), optimised.begin(), optimised.end());
  run_stage("evaluate", [&] {
    io::write_text(base.out_dir / "comparison.csv", render_report(grid.reports, ReportFormat::Csv));
    io::write_text(base.out_dir / "comparison.txt", render_report(grid.reports, ReportFormat::Text));
    io::write_text(base.out_dir / "comparison.svg", render_svg(grid.reports));
    io::write_text(base.out_dir / "timing.csv", render_report(grid.reports, ReportFormat::Csv, true));
  });
  return grid;
}

}  // namespace asrlab

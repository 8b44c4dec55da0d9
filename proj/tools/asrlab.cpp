// asrlab command-line driver: one subcommand per pipeline stage plus `run`
// (one system) and `grid` (the sysK / sysK+GA comparison).
//
// Stage seeds are derived from --seed exactly as `run` derives them, so a
// chain of stage commands reproduces a `run` with the same seed.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asrlab.hpp"

namespace fs = std::filesystem;
using namespace asrlab;

namespace {

// Treats a manifest without split assignments as all-training.
CorpusManifest as_training(CorpusManifest m) {
  const bool has_split =
      std::any_of(m.records.begin(), m.records.end(), [](const UtteranceRecord& r) { return r.split != Split::None; });
  if (!has_split)
    for (auto& r : m.records) r.split = Split::Train;
  return m;
}

Split split_option(const std::string& name) {
  const auto s = parse_split(name);
  require(s.has_value() && *s != Split::None, ErrorCode::InvalidConfig, "unknown split '" + name + "'");
  return *s;
}

SomEncoding encoding_option(const std::string& name) {
  require(name == "soft" || name == "onehot", ErrorCode::InvalidConfig, "encoding must be soft or onehot");
  return name == "soft" ? SomEncoding::Soft : SomEncoding::OneHot;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Flags shared by `run` and `grid`. Empty/unset means "keep the config file value".
struct ExperimentFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string manifest;
  std::optional<int> words, speakers, reps, hidden, mlp_epochs, som_epochs, pop, gens;
  std::vector<std::string> sets;

  void add(CLI::App* app) {
    app->add_option("--config", config, "experiment config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "global seed");
    app->add_option("--out-dir", out_dir, "output directory");
    app->add_option("--manifest", manifest, "corpus manifest (default: synthesise)")->check(CLI::ExistingFile);
    app->add_option("--words", words, "synthetic vocabulary size");
    app->add_option("--speakers", speakers, "synthetic speakers");
    app->add_option("--reps", reps, "synthetic repetitions per word");
    app->add_option("--hidden", hidden, "MLP hidden units");
    app->add_option("--mlp-epochs", mlp_epochs, "MLP epochs");
    app->add_option("--som-epochs", som_epochs, "SOM epochs");
    app->add_option("--pop", pop, "GA population");
    app->add_option("--gens", gens, "GA generations");
    app->add_option("--set", sets, "override any config key: section.key=value");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_experiment_config(config);
    if (seed) c.seed = *seed;
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (!manifest.empty()) c.manifest = fs::path(manifest);
    if (words) c.synth.words = *words;
    if (speakers) c.synth.speakers = *speakers;
    if (reps) c.synth.repetitions = *reps;
    if (hidden) c.mlp.n_hidden = *hidden;
    if (mlp_epochs) c.mlp.epochs = *mlp_epochs;
    if (som_epochs) c.som.epochs = *som_epochs;
    if (pop) c.ga.population = *pop;
    if (gens) c.ga.generations = *gens;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      const auto dot = s.find('.');
      require(eq != std::string::npos && dot != std::string::npos && dot < eq, ErrorCode::InvalidConfig,
              "--set expects section.key=value, got '" + s + "'");
      apply_config_value(c, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1), "--set " + s);
    }
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asrlab: hybrid SOM/MLP/HMM isolated-word recogniser with GA-tuned word models"};
  app.require_subcommand(1);
  std::function<void()> action;

  // synth ------------------------------------------------------------------
  struct {
    int words = 20, speakers = 5, reps = 10;
    std::uint64_t seed = 7;
    std::string out_dir;
    double train = 0.8, dev = 0.125;
    bool no_split = false;
  } sy;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus (WAV files + manifest.csv)");
  synth->add_option("--words", sy.words, "vocabulary size")->capture_default_str();
  synth->add_option("--speakers", sy.speakers, "speakers")->capture_default_str();
  synth->add_option("--reps", sy.reps, "repetitions per word")->capture_default_str();
  synth->add_option("--seed", sy.seed, "global seed")->capture_default_str();
  synth->add_option("--out-dir", sy.out_dir, "output directory")->required();
  synth->add_option("--train-fraction", sy.train, "training share per speaker/word")->capture_default_str();
  synth->add_option("--dev-fraction", sy.dev, "share of training moved to dev")->capture_default_str();
  synth->add_flag("--no-split", sy.no_split, "leave the split column empty");
  synth->callback([&] {
    action = [&] {
      SynthSpec spec;
      spec.words = sy.words;
      spec.speakers = sy.speakers;
      spec.repetitions = sy.reps;
      spec.seed = derive_seed(sy.seed, "synth");
      auto m = run_stage("synth", [&] { return synth_corpus(spec, fs::path(sy.out_dir)); });
      if (!sy.no_split) {
        m = run_stage("split", [&] {
          return split_corpus(m, SplitConfig{sy.train, sy.dev, derive_seed(sy.seed, "split")});
        });
        run_stage("split", [&] { save_manifest(fs::path(sy.out_dir) / "manifest.csv", m); });
      }
      std::cout << m.records.size() << " utterances, " << m.vocab_size() << " words -> "
                << (fs::path(sy.out_dir) / "manifest.csv").string() << "\n";
    };
  });

  // extract ----------------------------------------------------------------
  struct {
    std::string manifest, out;
    FrontendConfig fe;
  } ex;
  auto* extract = app.add_subcommand("extract", "log-RASTA-PLP features for every manifest utterance");
  extract->add_option("--manifest", ex.manifest, "corpus manifest")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", ex.out, "features CSV")->required();
  extract->add_option("--frame-ms", ex.fe.frame_ms, "analysis frame length")->capture_default_str();
  extract->add_option("--overlap-ms", ex.fe.overlap_ms, "frame overlap")->capture_default_str();
  extract->add_option("--order", ex.fe.model_order, "LPC order")->capture_default_str();
  extract->add_option("--target-frames", ex.fe.target_frames, "frames per utterance (0: longest training)")
      ->capture_default_str();
  extract->add_option("--trim-db", ex.fe.trim_threshold_db, "silence trim threshold below peak")
      ->capture_default_str();
  extract->add_flag("!--no-rasta", ex.fe.rasta_enabled, "skip RASTA filtering");
  extract->callback([&] {
    action = [&] {
      ex.fe.n_cepstra = ex.fe.model_order + 1;
      const auto m = run_stage("extract", [&] { return load_manifest(ex.manifest); });
      const auto features = run_stage("extract", [&] { return extract_features(m, ex.fe); });
      run_stage("extract", [&] { io::write_text(ex.out, features_csv(features)); });
      std::cout << features.ids.size() << " utterances x " << features.target_frames << " frames -> " << ex.out
                << "\n";
    };
  });

  // train-som ---------------------------------------------------------------
  struct {
    std::string features, labels, out, csv;
    SomConfig som;
    std::uint64_t seed = 7;
  } ts;
  auto* train_som = app.add_subcommand("train-som", "train the SOM codebook");
  train_som->add_option("--features", ts.features, "features CSV")->required()->check(CLI::ExistingFile);
  train_som->add_option("--labels", ts.labels, "manifest; restricts training to its train split")
      ->check(CLI::ExistingFile);
  train_som->add_option("--k", ts.som.k_units, "units")->capture_default_str();
  train_som->add_option("--rows", ts.som.grid_rows, "grid rows (0: default shape)");
  train_som->add_option("--cols", ts.som.grid_cols, "grid columns (0: default shape)");
  train_som->add_option("--epochs", ts.som.epochs, "epochs")->capture_default_str();
  train_som->add_option("--seed", ts.seed, "global seed")->capture_default_str();
  train_som->add_option("--out", ts.out, "codebook file")->required();
  train_som->add_option("--csv", ts.csv, "also write prototypes as CSV");
  train_som->callback([&] {
    action = [&] {
      ts.som.seed = derive_seed(ts.seed, "som");
      const auto features = run_stage("train-som", [&] { return load_features(ts.features); });
      const auto data = ts.labels.empty()
                            ? features.values
                            : run_stage("train-som", [&] {
                                const auto m = as_training(load_manifest(ts.labels));
                                return features.rows_for(m, split_records(m, Split::Train));
                              });
      const auto res = run_stage("train-som", [&] { return som_train_detailed(data, ts.som); });
      run_stage("train-som", [&] { save_codebook(ts.out, res.codebook); });
      if (!ts.csv.empty()) io::write_text(ts.csv, codebook_csv(res.codebook));
      std::cout << "quantization error " << res.initial_quantization_error << " -> "
                << res.final_quantization_error << "\n";
    };
  });

  // train-mlp ---------------------------------------------------------------
  struct {
    std::string features, som, labels, out, loss, encoding = "soft";
    MlpConfig mlp;
    std::uint64_t seed = 7;
  } tm;
  auto* train_mlp = app.add_subcommand("train-mlp", "train the posterior MLP on SOM activations");
  train_mlp->add_option("--features", tm.features, "features CSV")->required()->check(CLI::ExistingFile);
  train_mlp->add_option("--som", tm.som, "SOM codebook")->required()->check(CLI::ExistingFile);
  train_mlp->add_option("--labels", tm.labels, "manifest with word labels")->required()->check(CLI::ExistingFile);
  train_mlp->add_option("--hidden", tm.mlp.n_hidden, "hidden units")->capture_default_str();
  train_mlp->add_option("--epochs", tm.mlp.epochs, "epochs")->capture_default_str();
  train_mlp->add_option("--lr", tm.mlp.lr, "learning rate")->capture_default_str();
  train_mlp->add_option("--batch-size", tm.mlp.batch_size, "mini-batch size")->capture_default_str();
  train_mlp->add_option("--seed", tm.seed, "global seed")->capture_default_str();
  train_mlp->add_option("--encoding", tm.encoding, "SOM encoding: soft or onehot")->capture_default_str();
  train_mlp->add_option("--out", tm.out, "model file")->required();
  train_mlp->add_option("--loss-out", tm.loss, "per-epoch loss CSV");
  train_mlp->callback([&] {
    action = [&] {
      tm.mlp.seed = derive_seed(tm.seed, "mlp");
      const auto res = run_stage("train-mlp", [&] {
        const auto m = as_training(load_manifest(tm.labels));
        return train_mlp_stage(load_features(tm.features), m, load_codebook(tm.som), tm.mlp,
                               encoding_option(tm.encoding));
      });
      run_stage("train-mlp", [&] { save_mlp(tm.out, res.model); });
      if (!tm.loss.empty()) io::write_text(tm.loss, loss_history_csv(res.epoch_losses));
      std::cout << "loss " << res.epoch_losses.front() << " -> " << res.epoch_losses.back() << "\n";
    };
  });

  // build-hmm ---------------------------------------------------------------
  struct {
    std::string labels, out, csv;
    double smoothing = 1.0;
  } bh;
  auto* build_hmm = app.add_subcommand("build-hmm", "word bigram HMM from the training label sequences");
  build_hmm->add_option("--labels", bh.labels, "manifest")->required()->check(CLI::ExistingFile);
  build_hmm->add_option("--smoothing", bh.smoothing, "additive count smoothing")->capture_default_str();
  build_hmm->add_option("--out", bh.out, "HMM file")->required();
  build_hmm->add_option("--csv", bh.csv, "also write the HMM as CSV");
  build_hmm->callback([&] {
    action = [&] {
      const auto hmm = run_stage("build-hmm", [&] {
        const auto m = as_training(load_manifest(bh.labels));
        return build_word_hmm(label_sequences(m, Split::Train), m.vocab_size(), bh.smoothing);
      });
      run_stage("build-hmm", [&] { save_hmm(bh.out, hmm); });
      if (!bh.csv.empty()) io::write_text(bh.csv, hmm_csv(hmm));
      std::cout << hmm.states() << " word states -> " << bh.out << "\n";
    };
  });

  // optimize-ga -------------------------------------------------------------
  struct {
    std::string hmm, posteriors, labels, out, history, split = "dev", fitness = "mse";
    GaConfig ga;
    std::uint64_t seed = 7;
  } og;
  auto* optimize = app.add_subcommand("optimize-ga", "evolve HMM transition/prior probabilities on dev posteriors");
  optimize->add_option("--hmm", og.hmm, "baseline HMM")->required()->check(CLI::ExistingFile);
  optimize->add_option("--posteriors", og.posteriors, "dev posterior CSV")->required()->check(CLI::ExistingFile);
  optimize->add_option("--labels", og.labels, "manifest with dev labels")->required()->check(CLI::ExistingFile);
  optimize->add_option("--split", og.split, "manifest split the posteriors belong to")->capture_default_str();
  optimize->add_option("--pop", og.ga.population, "population")->capture_default_str();
  optimize->add_option("--gens", og.ga.generations, "generations")->capture_default_str();
  optimize->add_option("--fitness", og.fitness, "mse or wra")->capture_default_str();
  optimize->add_option("--seed", og.seed, "global seed")->capture_default_str();
  optimize->add_option("--out", og.out, "optimised HMM file")->required();
  optimize->add_option("--history", og.history, "fitness history CSV");
  optimize->callback([&] {
    action = [&] {
      og.ga.seed = derive_seed(og.seed, "ga");
      require(og.fitness == "mse" || og.fitness == "wra", ErrorCode::InvalidConfig, "fitness must be mse or wra");
      og.ga.fitness = og.fitness == "mse" ? GaFitness::Mse : GaFitness::Wra;
      const auto res = run_stage("optimize-ga", [&] {
        const auto m = load_manifest(og.labels);
        const auto dev = dev_sequences(m, load_posteriors(og.posteriors), split_option(og.split));
        return evolve(dev, load_hmm(og.hmm), og.ga);
      });
      run_stage("optimize-ga", [&] { save_hmm(og.out, res.best); });
      if (!og.history.empty()) io::write_text(og.history, ga_history_csv(res.history));
      std::cout << "dev fitness " << res.baseline_fitness << " -> " << res.best_fitness << "\n";
    };
  });

  // decode ------------------------------------------------------------------
  struct {
    std::string mlp, som, hmm, features, out, manifest, split = "test", posteriors_out, encoding = "soft";
  } dc;
  auto* decode = app.add_subcommand("decode", "Viterbi-decode utterance sequences");
  decode->add_option("--mlp", dc.mlp, "MLP model")->required()->check(CLI::ExistingFile);
  decode->add_option("--som", dc.som, "SOM codebook")->required()->check(CLI::ExistingFile);
  decode->add_option("--hmm", dc.hmm, "word HMM")->required()->check(CLI::ExistingFile);
  decode->add_option("--features", dc.features, "features CSV")->required()->check(CLI::ExistingFile);
  decode->add_option("--out", dc.out, "decoded CSV")->required();
  decode->add_option("--manifest", dc.manifest,
                     "decode each speaker's --split utterances as one sequence (default: all rows, one sequence)")
      ->check(CLI::ExistingFile);
  decode->add_option("--split", dc.split, "split to decode with --manifest")->capture_default_str();
  decode->add_option("--encoding", dc.encoding, "SOM encoding: soft or onehot")->capture_default_str();
  decode->add_option("--posteriors-out", dc.posteriors_out, "also write MLP posteriors for the decoded rows");
  decode->callback([&] {
    action = [&] {
      const auto encoding = encoding_option(dc.encoding);
      const auto features = run_stage("decode", [&] { return load_features(dc.features); });
      const auto som = run_stage("decode", [&] { return load_codebook(dc.som); });
      const auto mlp = run_stage("decode", [&] { return load_mlp(dc.mlp); });
      const auto hmm = run_stage("decode", [&] { return load_hmm(dc.hmm); });
      std::vector<DecodedUtterance> decoded;
      PosteriorTable table;
      run_stage("decode", [&] {
        if (dc.manifest.empty()) {
          const auto res = decode_utterance_sequence(mlp, som, hmm, features.values, encoding);
          for (std::size_t t = 0; t < features.ids.size(); ++t)
            decoded.push_back({features.ids[t], res.word_indices[t], "", res.path_scores[t]});
          table.ids = features.ids;
          table.posteriors = mlp_posteriors(mlp, som_encode_all(som, features.values, encoding));
        } else {
          const auto m = load_manifest(dc.manifest);
          const auto split = split_option(dc.split);
          decoded = decode_split(features, m, som, mlp, hmm, split, encoding);
          table = posteriors_for(features, m, som, mlp, split, encoding);
        }
        io::write_text(dc.out, decoded_csv(decoded));
        if (!dc.posteriors_out.empty()) io::write_text(dc.posteriors_out, posteriors_csv(table));
      });
      std::cout << decoded.size() << " utterances -> " << dc.out << "\n";
    };
  });

  // evaluate ----------------------------------------------------------------
  struct {
    std::vector<std::string> decoded, systems;
    std::string manifest, out, svg, text;
  } ev;
  auto* evaluate = app.add_subcommand("evaluate", "per-speaker WRA report; repeat --decoded/--system to compare");
  evaluate->add_option("--decoded", ev.decoded, "decoded CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--manifest", ev.manifest, "manifest with true labels")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--system", ev.systems, "system name per --decoded")->required();
  evaluate->add_option("--out", ev.out, "report CSV")->required();
  evaluate->add_option("--svg", ev.svg, "bar chart");
  evaluate->add_option("--text", ev.text, "aligned text table");
  evaluate->callback([&] {
    action = [&] {
      require(ev.decoded.size() == ev.systems.size(), ErrorCode::InvalidConfig,
              "need one --system per --decoded");
      std::vector<EvalReport> reports;
      run_stage("evaluate", [&] {
        const auto m = load_manifest(ev.manifest);
        for (std::size_t i = 0; i < ev.decoded.size(); ++i)
          reports.push_back(score_decoded(load_decoded(ev.decoded[i]), m, ev.systems[i]));
        io::write_text(ev.out, render_report(reports, ReportFormat::Csv));
        if (!ev.svg.empty()) io::write_text(ev.svg, render_svg(reports));
        if (!ev.text.empty()) io::write_text(ev.text, render_report(reports, ReportFormat::Text));
      });
      std::cout << render_report(reports, ReportFormat::Text);
    };
  });

  // run ---------------------------------------------------------------------
  ExperimentFlags run_flags;
  std::optional<int> run_k;
  std::optional<bool> run_ga;
  auto* run = app.add_subcommand("run", "one sysK experiment (and sysK+GA) end to end");
  run_flags.add(run);
  run->add_option("--k", run_k, "SOM units");
  run->add_flag("--ga,!--no-ga", run_ga, "also evaluate the GA-optimised HMM");
  run->callback([&] {
    action = [&] {
      auto cfg = run_flags.resolve();
      if (run_k) {
        cfg.som.k_units = *run_k;
        cfg.som.grid_rows = cfg.som.grid_cols = 0;
      }
      if (run_ga) cfg.ga_enabled = *run_ga;
      const auto outcome = run_experiment(cfg);
      std::cout << render_report(outcome.reports, ReportFormat::Text, true);
      if (cfg.ga_enabled)
        std::cout << "dev fitness " << outcome.baseline_dev_fitness << " -> " << outcome.ga_dev_fitness << "\n";
      std::cout << "artifacts in " << cfg.out_dir.string() << "\n";
    };
  });

  // grid --------------------------------------------------------------------
  ExperimentFlags grid_flags;
  std::string k_list = "16,32,64,128", ga_mode = "both";
  auto* grid = app.add_subcommand("grid", "sysK for several K, with and without GA, in one comparison table");
  grid_flags.add(grid);
  grid->add_option("--k-list", k_list, "comma-separated SOM sizes")->capture_default_str();
  grid->add_option("--ga", ga_mode, "both, on or off")->capture_default_str();
  grid->callback([&] {
    action = [&] {
      const auto cfg = grid_flags.resolve();
      std::vector<int> ks;
      for (const auto& k : split_list(k_list)) ks.push_back(static_cast<int>(io::parse_int(k, "--k-list")));
      require(ga_mode == "both" || ga_mode == "on" || ga_mode == "off", ErrorCode::InvalidConfig,
              "--ga must be both, on or off");
      const auto mode = ga_mode == "both" ? GaMode::Both : ga_mode == "on" ? GaMode::On : GaMode::Off;
      const auto outcome = run_grid(cfg, ks, mode);
      std::cout << render_report(outcome.reports, ReportFormat::Text, true);
      std::cout << "artifacts in " << cfg.out_dir.string() << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (action) action();
  } catch (const Error& e) {
    std::cerr << "asrlab " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "asrlab " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

// Experiment config files: "[section]" headers followed by "key = value"
// lines; '#' starts a comment. Unknown sections or keys are rejected.

#include <filesystem>
#include <string>
#include <string_view>

#include "asrlab/error.hpp"
#include "asrlab/pipeline.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  fail(ErrorCode::InvalidConfig, where + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail

inline void apply_config_value(ExperimentConfig& c, const std::string& section, const std::string& key,
                               const std::string& v, const std::string& where) {
  auto real = [&] { return io::parse_double(v, where); };
  auto integer = [&] { return static_cast<int>(io::parse_int(v, where)); };
  auto flag = [&] { return detail::parse_bool(v, where); };
  const std::string k = section + "." + key;

  if (k == "experiment.seed") c.seed = static_cast<std::uint64_t>(io::parse_int(v, where));
  else if (k == "experiment.out_dir") c.out_dir = v;
  else if (k == "experiment.ga") c.ga_enabled = flag();
  else if (k == "experiment.hmm_smoothing") c.hmm_smoothing = real();
  else if (k == "experiment.encoding") {
    require(v == "soft" || v == "onehot", ErrorCode::InvalidConfig, where + ": encoding must be soft or onehot");
    c.encoding = v == "soft" ? SomEncoding::Soft : SomEncoding::OneHot;
  }
  else if (k == "corpus.manifest") c.manifest = std::filesystem::path(v);
  else if (k == "corpus.words") c.synth.words = integer();
  else if (k == "corpus.speakers") c.synth.speakers = integer();
  else if (k == "corpus.reps") c.synth.repetitions = integer();
  else if (k == "corpus.train_fraction") c.split.train_fraction = real();
  else if (k == "corpus.dev_fraction") c.split.dev_fraction = real();
  else if (k == "corpus.resplit") c.resplit = flag();
  else if (k == "frontend.frame_ms") c.frontend.frame_ms = real();
  else if (k == "frontend.overlap_ms") c.frontend.overlap_ms = real();
  else if (k == "frontend.hop_ms") c.frontend.hop_ms = real();
  else if (k == "frontend.order") {
    c.frontend.model_order = integer();
    c.frontend.n_cepstra = c.frontend.model_order + 1;
  }
  else if (k == "frontend.target_frames") c.frontend.target_frames = integer();
  else if (k == "frontend.trim_db") c.frontend.trim_threshold_db = real();
  else if (k == "frontend.rasta") c.frontend.rasta_enabled = flag();
  else if (k == "som.k") c.som.k_units = integer();
  else if (k == "som.rows") c.som.grid_rows = integer();
  else if (k == "som.cols") c.som.grid_cols = integer();
  else if (k == "som.epochs") c.som.epochs = integer();
  else if (k == "som.lr_initial") c.som.lr_initial = real();
  else if (k == "som.lr_final") c.som.lr_final = real();
  else if (k == "som.sigma_initial") c.som.sigma_initial = real();
  else if (k == "som.sigma_final") c.som.sigma_final = real();
  else if (k == "mlp.hidden") c.mlp.n_hidden = integer();
  else if (k == "mlp.lr") c.mlp.lr = real();
  else if (k == "mlp.epochs") c.mlp.epochs = integer();
  else if (k == "mlp.batch_size") c.mlp.batch_size = integer();
  else if (k == "mlp.momentum") c.mlp.momentum = real();
  else if (k == "mlp.init_scale") c.mlp.init_scale = real();
  else if (k == "mlp.standardize") c.mlp.standardize_inputs = flag();
  else if (k == "ga.population") c.ga.population = integer();
  else if (k == "ga.generations") c.ga.generations = integer();
  else if (k == "ga.crossover_rate") c.ga.crossover_rate = real();
  else if (k == "ga.mutation_rate") c.ga.mutation_rate_per_gene = real();
  else if (k == "ga.mutation_sigma") c.ga.mutation_sigma = real();
  else if (k == "ga.tournament") c.ga.tournament_size = integer();
  else if (k == "ga.elite") c.ga.elite_count = integer();
  else if (k == "ga.seed_with_baseline") c.ga.seed_with_baseline = flag();
  else if (k == "ga.fitness") {
    require(v == "mse" || v == "wra", ErrorCode::InvalidConfig, where + ": fitness must be mse or wra");
    c.ga.fitness = v == "mse" ? GaFitness::Mse : GaFitness::Wra;
  }
  else fail(ErrorCode::InvalidConfig, where + ": unknown key '" + k + "'");
}

inline ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin,
                                                ExperimentConfig c = {}) {
  std::string section;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', ErrorCode::InvalidConfig, where + ": unterminated section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidConfig, where + ": expected key = value");
    require(!section.empty(), ErrorCode::InvalidConfig, where + ": key outside a section");
    apply_config_value(c, section, detail::trim(std::string_view(line).substr(0, eq)),
                       detail::trim(std::string_view(line).substr(eq + 1)), where);
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig c = {}) {
  std::string text;
  for (const auto& line : io::read_lines(path)) text += line + '\n';
  return parse_experiment_config(text, path.string(), std::move(c));
}

}  // namespace asrlab

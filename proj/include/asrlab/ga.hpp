#pragma once

// Genetic search over the word-HMM probabilities (transition rows and
// initial-state vector). MLP posteriors and class priors stay frozen.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "asrlab/decoder.hpp"
#include "asrlab/error.hpp"
#include "asrlab/rng.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

enum class GaFitness { Mse, Wra };

struct GaConfig {
  int population = 30;
  int generations = 100;
  double crossover_rate = 0.9;
  double mutation_rate_per_gene = 0.01;
  double mutation_sigma = 0.05;
  int tournament_size = 3;
  int elite_count = 2;
  std::uint64_t seed = 7;
  bool seed_with_baseline = true;
  GaFitness fitness = GaFitness::Mse;

  void validate() const {
    require(population >= 2, ErrorCode::InvalidConfig, "ga: population must be >= 2");
    require(generations >= 0, ErrorCode::InvalidConfig, "ga: generations must be >= 0");
    require(elite_count >= 0 && elite_count < population, ErrorCode::InvalidConfig,
            "ga: need 0 <= elite_count < population");
    require(crossover_rate >= 0 && crossover_rate <= 1 && mutation_rate_per_gene >= 0 && mutation_rate_per_gene <= 1,
            ErrorCode::InvalidConfig, "ga: rates must lie in [0, 1]");
    require(mutation_sigma >= 0, ErrorCode::InvalidConfig, "ga: mutation_sigma must be >= 0");
    require(tournament_size >= 1, ErrorCode::InvalidConfig, "ga: tournament_size must be >= 1");
  }
};

// Genes: the V transition rows followed by the initial-state vector.
struct Chromosome {
  std::vector<double> genes;
  std::size_t vocab = 0;

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

struct FitnessRecord {
  int generation = 0;
  double best_fitness = 0.0;  // best seen up to and including this generation
  double mean_fitness = 0.0;  // mean of this generation's population
};

struct DevSequence {
  Matrix posteriors;       // T x V MLP outputs
  std::vector<int> truth;  // T word indices
};

inline std::size_t chromosome_length(std::size_t vocab) { return vocab * vocab + vocab; }

inline void normalise_simplex(std::span<double> row) {
  double total = 0.0;
  for (auto& g : row) {
    if (!(g > 0.0)) g = 0.0;  // also maps NaN to 0
    total += g;
  }
  if (total <= 0.0 || !std::isfinite(total)) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    return;
  }
  for (auto& g : row) g /= total;
}

// Clamp negatives to zero and renormalise every row; an all-zero row becomes uniform.
inline Chromosome repair(std::vector<double> genes, std::size_t vocab) {
  require(vocab >= 1 && genes.size() == chromosome_length(vocab), ErrorCode::DimensionMismatch,
          "repair: chromosome length must be V*V + V");
  for (std::size_t r = 0; r <= vocab; ++r) normalise_simplex(std::span<double>(genes).subspan(r * vocab, vocab));
  return {std::move(genes), vocab};
}

inline bool is_simplex_chromosome(const Chromosome& c, double tol = 1e-9) {
  if (c.vocab == 0 || c.genes.size() != chromosome_length(c.vocab)) return false;
  for (std::size_t r = 0; r <= c.vocab; ++r) {
    double total = 0.0;
    for (std::size_t q = 0; q < c.vocab; ++q) {
      const double g = c.genes[r * c.vocab + q];
      if (!(g >= 0.0)) return false;
      total += g;
    }
    if (std::abs(total - 1.0) > tol) return false;
  }
  return true;
}

inline Chromosome chromosome_from_hmm(const WordHmm& hmm) {
  Chromosome c;
  c.vocab = hmm.states();
  c.genes = hmm.transition.data();
  c.genes.insert(c.genes.end(), hmm.prior.begin(), hmm.prior.end());
  return c;
}

inline WordHmm chromosome_to_hmm(const Chromosome& c, const Vector& class_priors) {
  require(is_simplex_chromosome(c), ErrorCode::InvalidChromosome, "chromosome rows are not on the simplex");
  WordHmm hmm;
  const std::size_t v = c.vocab;
  hmm.transition = Matrix(v, v);
  std::copy_n(c.genes.begin(), v * v, hmm.transition.data().begin());
  hmm.prior.assign(c.genes.begin() + static_cast<std::ptrdiff_t>(v * v), c.genes.end());
  hmm.class_priors = class_priors;
  return hmm;
}

// Dev sequences with emissions already divided by the class priors.
struct ScaledDevSet {
  std::vector<Matrix> likelihoods;
  std::vector<std::vector<int>> truth;
  std::size_t steps = 0;
};

inline ScaledDevSet scale_dev_set(std::span<const DevSequence> dev, const Vector& class_priors) {
  require(!dev.empty(), ErrorCode::PreconditionFailed, "ga: empty dev set");
  ScaledDevSet out;
  for (const auto& seq : dev) {
    require(seq.posteriors.rows() == seq.truth.size() && !seq.truth.empty(), ErrorCode::DimensionMismatch,
            "ga: dev sequence length mismatch");
    for (int y : seq.truth)
      require(y >= 0 && static_cast<std::size_t>(y) < class_priors.size(), ErrorCode::LabelOutOfRange,
              "ga: dev label " + std::to_string(y));
    out.likelihoods.push_back(scaled_likelihoods(seq.posteriors, class_priors));
    out.truth.push_back(seq.truth);
    out.steps += seq.truth.size();
  }
  return out;
}

inline double fitness_scaled(const WordHmm& hmm, const ScaledDevSet& dev, GaFitness kind = GaFitness::Mse) {
  double total = 0.0;
  for (std::size_t s = 0; s < dev.likelihoods.size(); ++s) {
    const auto& truth = dev.truth[s];
    if (kind == GaFitness::Wra) {
      const auto path = viterbi(hmm, dev.likelihoods[s]).word_indices;
      for (std::size_t t = 0; t < truth.size(); ++t) total += path[t] == truth[t] ? 1.0 : 0.0;
      continue;
    }
    const auto scores = forward_scores(hmm, dev.likelihoods[s]).per_step;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const auto row = scores.row(t);
      for (std::size_t q = 0; q < row.size(); ++q) {
        const double target = static_cast<int>(q) == truth[t] ? 1.0 : 0.0;
        total += (target - row[q]) * (target - row[q]);
      }
    }
  }
  const double mean = total / static_cast<double>(dev.steps);
  return kind == GaFitness::Wra ? mean : -mean;
}

// Negative mean over all dev steps of |onehot(truth) - forward posterior|^2;
// 0 is the maximum.
inline double fitness(const Chromosome& c, std::span<const DevSequence> dev, const Vector& class_priors,
                      GaFitness kind = GaFitness::Mse) {
  require(is_simplex_chromosome(c), ErrorCode::InvalidChromosome, "fitness: chromosome is not repaired");
  return fitness_scaled(chromosome_to_hmm(c, class_priors), scale_dev_set(dev, class_priors), kind);
}

struct GaResult {
  WordHmm best;
  double best_fitness = 0.0;
  double baseline_fitness = 0.0;
  std::vector<FitnessRecord> history;
};

inline GaResult evolve(std::span<const DevSequence> dev, const WordHmm& baseline, const GaConfig& cfg) {
  cfg.validate();
  baseline.validate();
  const std::size_t v = baseline.states();
  const auto scaled = scale_dev_set(dev, baseline.class_priors);
  auto evaluate = [&](const Chromosome& c) {
    require(is_simplex_chromosome(c), ErrorCode::InvalidChromosome, "ga: chromosome left the simplex");
    return fitness_scaled(chromosome_to_hmm(c, baseline.class_priors), scaled, cfg.fitness);
  };

  Rng rng(cfg.seed);
  const auto pop_size = static_cast<std::size_t>(cfg.population);
  const auto n_genes = chromosome_length(v);
  const auto base = chromosome_from_hmm(baseline);

  std::vector<Chromosome> population;
  population.reserve(pop_size);
  if (cfg.seed_with_baseline) population.push_back(base);
  while (population.size() < pop_size) {
    std::vector<double> genes(n_genes);
    if (cfg.seed_with_baseline) {
      // Neighbours of the baseline: every gene perturbed once.
      for (std::size_t i = 0; i < n_genes; ++i) genes[i] = base.genes[i] + gaussian(rng, cfg.mutation_sigma);
    } else {
      // Flat Dirichlet draws.
      for (auto& g : genes) g = -std::log(1.0 - uniform01(rng));
    }
    population.push_back(repair(std::move(genes), v));
  }

  std::vector<double> scores(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) scores[i] = evaluate(population[i]);

  GaResult result;
  result.baseline_fitness = evaluate(base);
  std::size_t best_idx = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  Chromosome best = population[best_idx];
  double best_score = scores[best_idx];

  auto record = [&](int generation) {
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(pop_size);
    result.history.push_back({generation, best_score, mean});
  };
  record(0);

  auto tournament = [&]() -> const Chromosome& {
    std::size_t winner = uniform_index(rng, pop_size);
    for (int i = 1; i < cfg.tournament_size; ++i) {
      const std::size_t challenger = uniform_index(rng, pop_size);
      if (scores[challenger] > scores[winner] || (scores[challenger] == scores[winner] && challenger < winner))
        winner = challenger;
    }
    return population[winner];
  };

  std::vector<std::size_t> ranking(pop_size);
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::iota(ranking.begin(), ranking.end(), 0);
    std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<Chromosome> next;
    std::vector<double> next_scores;
    next.reserve(pop_size);
    for (int e = 0; e < cfg.elite_count; ++e) {
      next.push_back(population[ranking[static_cast<std::size_t>(e)]]);
      next_scores.push_back(scores[ranking[static_cast<std::size_t>(e)]]);
    }
    while (next.size() < pop_size) {
      const Chromosome& a = tournament();
      const Chromosome& b = tournament();
      std::vector<double> genes = a.genes;
      if (uniform01(rng) < cfg.crossover_rate)
        for (std::size_t i = 0; i < n_genes; ++i)
          if (uniform01(rng) < 0.5) genes[i] = b.genes[i];
      for (auto& g : genes)
        if (uniform01(rng) < cfg.mutation_rate_per_gene) g += gaussian(rng, cfg.mutation_sigma);
      next.push_back(repair(std::move(genes), v));
      next_scores.push_back(evaluate(next.back()));
    }
    population = std::move(next);
    scores = std::move(next_scores);

    best_idx = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    if (scores[best_idx] > best_score) {
      best_score = scores[best_idx];
      best = population[best_idx];
    }
    record(gen);
  }

  result.best = chromosome_to_hmm(best, baseline.class_priors);
  result.best_fitness = best_score;
  return result;
}

inline std::string ga_history_csv(std::span<const FitnessRecord> history) {
  std::string out = "generation,best_fitness,mean_fitness\n";
  for (const auto& r : history)
    out += std::to_string(r.generation) + ',' + io::format_double(r.best_fitness) + ',' +
           io::format_double(r.mean_fitness) + '\n';
  return out;
}

}  // namespace asrlab

#pragma once

// Hybrid HMM/MLP decoding. States are vocabulary words; emissions are
// scaled likelihoods p(q|x) / p(q) from the MLP posteriors.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "asrlab/error.hpp"
#include "asrlab/linalg.hpp"
#include "asrlab/mlp.hpp"
#include "asrlab/serialize.hpp"
#include "asrlab/som.hpp"

namespace asrlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

struct WordHmm {
  Matrix transition;   // V x V, row-stochastic
  Vector prior;        // initial-state distribution
  Vector class_priors; // p(q) from training labels, strictly positive

  std::size_t states() const { return prior.size(); }

  void validate(double tol = 1e-9) const {
    const std::size_t v = prior.size();
    require(v >= 1, ErrorCode::PreconditionFailed, "hmm: no states");
    require(transition.rows() == v && transition.cols() == v && class_priors.size() == v,
            ErrorCode::DimensionMismatch, "hmm: inconsistent dimensions");
    auto check_simplex = [&](std::span<const double> row, const char* what) {
      double total = 0.0;
      for (double p : row) {
        require(p >= 0.0 && std::isfinite(p), ErrorCode::PreconditionFailed, std::string("hmm: negative ") + what);
        total += p;
      }
      require(std::abs(total - 1.0) <= tol, ErrorCode::PreconditionFailed, std::string("hmm: ") + what + " not normalised");
    };
    for (std::size_t r = 0; r < v; ++r) check_simplex(transition.row(r), "transition row");
    check_simplex(prior, "prior");
    check_simplex(class_priors, "class priors");
    for (double p : class_priors) require(p > 0.0, ErrorCode::ZeroPrior, "hmm: zero class prior");
  }

  friend bool operator==(const WordHmm&, const WordHmm&) = default;
};

struct DecodeResult {
  std::vector<int> word_indices;
  double log_score = kNegInf;
  Matrix per_step_scores;           // T x V forward posteriors
  std::vector<double> path_scores;  // prefix log score of the best path at each step
};

inline Vector estimate_class_priors(std::span<const int> labels, std::size_t vocab, double smoothing) {
  require(vocab >= 1, ErrorCode::PreconditionFailed, "class priors: empty vocabulary");
  require(smoothing >= 0.0, ErrorCode::PreconditionFailed, "class priors: negative smoothing");
  require(!labels.empty() || smoothing > 0.0, ErrorCode::EmptyLabels, "class priors: no labels and no smoothing");
  Vector counts(vocab, smoothing);
  for (int y : labels) {
    require(y >= 0 && static_cast<std::size_t>(y) < vocab, ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  const double total = static_cast<double>(labels.size()) + static_cast<double>(vocab) * smoothing;
  for (auto& c : counts) c /= total;
  return counts;
}

// Smoothed bigram transitions over each label sequence, with prior and
// class priors both taken from the label frequencies.
inline WordHmm build_word_hmm(const std::vector<std::vector<int>>& sequences, std::size_t vocab,
                              double smoothing = 1.0) {
  require(smoothing > 0.0, ErrorCode::PreconditionFailed, "build_word_hmm: smoothing must be > 0");
  WordHmm hmm;
  hmm.transition = Matrix(vocab, vocab, smoothing);
  std::vector<int> all;
  for (const auto& seq : sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      require(seq[t] >= 0 && static_cast<std::size_t>(seq[t]) < vocab, ErrorCode::LabelOutOfRange,
              "label " + std::to_string(seq[t]));
      all.push_back(seq[t]);
      if (t > 0) hmm.transition(static_cast<std::size_t>(seq[t - 1]), static_cast<std::size_t>(seq[t])) += 1.0;
    }
  }
  for (std::size_t r = 0; r < vocab; ++r) {
    auto row = hmm.transition.row(r);
    double total = 0.0;
    for (double v : row) total += v;
    for (auto& v : row) v /= total;
  }
  hmm.prior = estimate_class_priors(all, vocab, smoothing);
  hmm.class_priors = hmm.prior;
  return hmm;
}

inline Matrix scaled_likelihoods(const Matrix& posteriors, std::span<const double> class_priors) {
  require(posteriors.cols() == class_priors.size() || posteriors.rows() == 0, ErrorCode::DimensionMismatch,
          "scaled_likelihoods: width");
  for (double p : class_priors) require(p > 0.0, ErrorCode::ZeroPrior, "scaled_likelihoods: zero class prior");
  Matrix out = posteriors;
  for (std::size_t t = 0; t < out.rows(); ++t)
    for (std::size_t q = 0; q < out.cols(); ++q) out(t, q) = posteriors(t, q) / class_priors[q];
  return out;
}

namespace detail {
inline void check_likelihoods(const WordHmm& hmm, const Matrix& lik) {
  require(lik.rows() >= 1, ErrorCode::PreconditionFailed, "decoder: empty observation sequence");
  require(lik.cols() == hmm.states(), ErrorCode::DimensionMismatch, "decoder: likelihood width");
  for (double v : lik.data())
    require(v >= 0.0 && !std::isnan(v), ErrorCode::PreconditionFailed, "decoder: negative likelihood");
}
}  // namespace detail

// Log-domain Viterbi. ln 0 is -inf; ties resolve to the lowest state index.
inline DecodeResult viterbi(const WordHmm& hmm, const Matrix& likelihoods) {
  detail::check_likelihoods(hmm, likelihoods);
  const std::size_t steps = likelihoods.rows();
  const std::size_t v = hmm.states();

  Matrix log_a(v, v);
  for (std::size_t i = 0; i < v * v; ++i) log_a.data()[i] = safe_log(hmm.transition.data()[i]);

  Matrix delta(steps, v);
  std::vector<std::size_t> back(steps * v, 0);
  for (std::size_t q = 0; q < v; ++q) delta(0, q) = safe_log(hmm.prior[q]) + safe_log(likelihoods(0, q));
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t q = 0; q < v; ++q) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < v; ++r) {
        const double s = delta(t - 1, r) + log_a(r, q);
        if (s > best) {
          best = s;
          arg = r;
        }
      }
      delta(t, q) = best + safe_log(likelihoods(t, q));
      back[t * v + q] = arg;
    }
  }

  DecodeResult res;
  std::size_t state = 0;
  for (std::size_t q = 0; q < v; ++q)
    if (delta(steps - 1, q) > res.log_score) {
      res.log_score = delta(steps - 1, q);
      state = q;
    }
  require(res.log_score > kNegInf, ErrorCode::AllPathsImpossible, "viterbi: every path has zero probability");

  res.word_indices.assign(steps, 0);
  res.path_scores.assign(steps, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    res.word_indices[t] = static_cast<int>(state);
    res.path_scores[t] = delta(t, state);
    if (t > 0) state = back[t * v + state];
  }
  return res;
}

struct ForwardResult {
  Matrix per_step;  // row t: normalised forward variables
  double log_likelihood = kNegInf;
};

inline ForwardResult forward_scores(const WordHmm& hmm, const Matrix& likelihoods) {
  detail::check_likelihoods(hmm, likelihoods);
  const std::size_t steps = likelihoods.rows();
  const std::size_t v = hmm.states();
  ForwardResult res;
  res.per_step = Matrix(steps, v);
  double log_total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = res.per_step.row(t);
    for (std::size_t q = 0; q < v; ++q) {
      double mass = 0.0;
      if (t == 0) {
        mass = hmm.prior[q];
      } else {
        const auto prev = res.per_step.row(t - 1);
        for (std::size_t r = 0; r < v; ++r) mass += prev[r] * hmm.transition(r, q);
      }
      row[q] = mass * likelihoods(t, q);
    }
    double norm = 0.0;
    for (double a : row) norm += a;
    require(norm > 0.0, ErrorCode::AllPathsImpossible, "forward: every path has zero probability");
    for (auto& a : row) a /= norm;
    log_total += std::log(norm);
  }
  res.log_likelihood = log_total;
  return res;
}

inline Matrix hybrid_likelihoods(const MlpModel& mlp, const SomCodebook& som, const WordHmm& hmm,
                                 const Matrix& utterances, SomEncoding encoding = SomEncoding::Soft) {
  require(utterances.rows() >= 1, ErrorCode::PreconditionFailed, "decode: empty utterance sequence");
  return scaled_likelihoods(mlp_posteriors(mlp, som_encode_all(som, utterances, encoding)), hmm.class_priors);
}

// som_encode -> mlp_posteriors -> scaled_likelihoods -> viterbi, with the
// forward posteriors attached.
inline DecodeResult decode_utterance_sequence(const MlpModel& mlp, const SomCodebook& som, const WordHmm& hmm,
                                              const Matrix& utterances, SomEncoding encoding = SomEncoding::Soft) {
  const auto lik = hybrid_likelihoods(mlp, som, hmm, utterances, encoding);
  auto res = viterbi(hmm, lik);
  res.per_step_scores = forward_scores(hmm, lik).per_step;
  return res;
}

// Layout: "AHMM", version, V (u32), then A row-major, prior, class priors as
// little-endian f64.
inline constexpr std::uint32_t kHmmFileVersion = 1;

inline std::vector<char> encode_hmm(const WordHmm& hmm) {
  io::BinaryWriter w;
  w.magic("AHMM");
  w.u32(kHmmFileVersion);
  w.u32(static_cast<std::uint32_t>(hmm.states()));
  w.f64s(hmm.transition.data());
  w.f64s(hmm.prior);
  w.f64s(hmm.class_priors);
  return w.bytes();
}

inline WordHmm decode_hmm(io::BinaryReader r) {
  r.expect_magic("AHMM");
  require(r.u32() == kHmmFileVersion, ErrorCode::ParseError, "unsupported hmm version");
  const std::size_t v = r.u32();
  WordHmm hmm;
  hmm.transition = Matrix(v, v);
  hmm.transition.data() = r.f64s(v * v);
  hmm.prior = r.f64s(v);
  hmm.class_priors = r.f64s(v);
  r.expect_end();
  return hmm;
}

inline void save_hmm(const std::filesystem::path& path, const WordHmm& hmm) { io::write_bytes(path, encode_hmm(hmm)); }
inline WordHmm load_hmm(const std::filesystem::path& path) { return decode_hmm(io::BinaryReader::open(path)); }

inline std::string hmm_csv(const WordHmm& hmm) {
  const std::size_t v = hmm.states();
  std::string out = "row";
  for (std::size_t q = 0; q < v; ++q) out += ",s" + std::to_string(q);
  out += '\n';
  for (std::size_t r = 0; r < v; ++r) {
    out += "A" + std::to_string(r);
    for (double p : hmm.transition.row(r)) out += ',' + io::format_double(p);
    out += '\n';
  }
  out += "prior";
  for (double p : hmm.prior) out += ',' + io::format_double(p);
  out += "\nclass_prior";
  for (double p : hmm.class_priors) out += ',' + io::format_double(p);
  out += '\n';
  return out;
}

}  // namespace asrlab

#pragma once

// Log-RASTA-PLP front end: Hamming framing, energy endpointing, Bark-domain
// critical-band analysis, RASTA band filtering, all-pole modelling and
// cepstra, and fixed-length utterance assembly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "asrlab/audio.hpp"
#include "asrlab/error.hpp"
#include "asrlab/linalg.hpp"

namespace asrlab {

struct FrontendConfig {
  double frame_ms = 25.0;
  double overlap_ms = 10.0;
  // Frame advance; 0 means frame_ms - overlap_ms.
  double hop_ms = 0.0;
  int model_order = 12;
  int n_cepstra = 13;
  // 0 selects the longest trimmed utterance of the training corpus.
  int target_frames = 0;
  double trim_threshold_db = 40.0;
  bool rasta_enabled = true;

  void validate() const {
    require(frame_ms > 0 && overlap_ms > 0 && overlap_ms < frame_ms, ErrorCode::InvalidConfig,
            "frontend: need 0 < overlap_ms < frame_ms");
    require(hop_ms >= 0, ErrorCode::InvalidConfig, "frontend: hop_ms must be >= 0");
    require(model_order >= 1, ErrorCode::InvalidConfig, "frontend: model_order must be >= 1");
    require(n_cepstra == model_order + 1, ErrorCode::InvalidConfig,
            "frontend: n_cepstra must equal model_order + 1");
    require(target_frames >= 0, ErrorCode::InvalidConfig, "frontend: target_frames must be >= 0");
    require(trim_threshold_db > 0, ErrorCode::InvalidConfig, "frontend: trim threshold must be > 0");
  }

  double effective_hop_ms() const { return hop_ms > 0 ? hop_ms : frame_ms - overlap_ms; }
};

struct FrameMatrix {
  Matrix frames;  // n_frames x frame_samples, windowed
  std::size_t hop_samples = 0;
  std::size_t frame_samples = 0;

  std::size_t n_frames() const { return frames.rows(); }
};

struct UtteranceFeature {
  std::vector<double> values;  // frame-major, n_cepstra * target_frames
  int n_valid_frames = 0;
};

inline std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  return w;
}

inline FrameMatrix frame_signal(const AudioSignal& signal, const FrontendConfig& cfg) {
  cfg.validate();
  require(signal.sample_rate_hz > 0, ErrorCode::PreconditionFailed, "sample rate must be positive");
  const double rate = signal.sample_rate_hz;
  FrameMatrix out;
  out.frame_samples = static_cast<std::size_t>(std::lround(cfg.frame_ms * rate / 1000.0));
  out.hop_samples = static_cast<std::size_t>(std::lround(cfg.effective_hop_ms() * rate / 1000.0));
  require(out.frame_samples >= 1 && out.hop_samples >= 1, ErrorCode::InvalidConfig,
          "frame or hop shorter than one sample");
  const std::size_t n = signal.samples.size();
  require(n >= out.frame_samples, ErrorCode::SignalTooShort,
          std::to_string(n) + " samples < frame of " + std::to_string(out.frame_samples));

  const std::size_t n_frames = (n - out.frame_samples) / out.hop_samples + 1;
  const auto window = hamming_window(out.frame_samples);
  out.frames = Matrix(n_frames, out.frame_samples);
  for (std::size_t f = 0; f < n_frames; ++f) {
    auto row = out.frames.row(f);
    const std::size_t start = f * out.hop_samples;
    for (std::size_t i = 0; i < out.frame_samples; ++i) row[i] = signal.samples[start + i] * window[i];
  }
  return out;
}

inline double frame_energy_db(std::span<const double> frame) {
  double e = 0.0;
  for (double x : frame) e += x * x;
  return 10.0 * std::log10(std::max(e, 1e-30));
}

// Drops leading and trailing frames quieter than (loudest - threshold) dB.
inline FrameMatrix trim_silence(const FrameMatrix& frames, const FrontendConfig& cfg) {
  const std::size_t n = frames.n_frames();
  require(n >= 1, ErrorCode::PreconditionFailed, "trim_silence needs at least one frame");
  std::vector<double> energy(n);
  for (std::size_t i = 0; i < n; ++i) energy[i] = frame_energy_db(frames.frames.row(i));
  const double threshold = *std::max_element(energy.begin(), energy.end()) - cfg.trim_threshold_db;

  std::size_t first = 0;
  while (first < n && energy[first] < threshold) ++first;
  std::size_t last = n;
  while (last > first && energy[last - 1] < threshold) --last;
  if (first >= last) {
    // Unreachable while the loudest frame sits at the threshold, kept for
    // non-finite energies.
    const auto best = static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) - energy.begin());
    first = best;
    last = best + 1;
  }

  FrameMatrix out;
  out.hop_samples = frames.hop_samples;
  out.frame_samples = frames.frame_samples;
  out.frames = Matrix(last - first, frames.frames.cols());
  for (std::size_t i = first; i < last; ++i)
    std::copy_n(frames.frames.row(i).begin(), frames.frames.cols(), out.frames.row(i - first).begin());
  return out;
}

inline double hz_to_bark(double hz) {
  const double x = hz / 600.0;
  return 6.0 * std::log(x + std::sqrt(x * x + 1.0));
}

inline double bark_to_hz(double bark) { return 600.0 * std::sinh(bark / 6.0); }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// |DFT|^2 of the zero-padded frame, bins 0..nfft/2. nfft must be a power of two.
inline std::vector<double> power_spectrum(std::span<const double> frame, std::size_t nfft) {
  require(nfft >= frame.size() && (nfft & (nfft - 1)) == 0, ErrorCode::PreconditionFailed,
          "power_spectrum: nfft must be a power of two >= frame length");
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];

  for (std::size_t i = 1, j = 0; i < nfft; ++i) {
    std::size_t bit = nfft >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (std::size_t len = 2; len <= nfft; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < nfft; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const auto u = buf[start + k];
        const auto v = buf[start + k + len / 2] * w;
        buf[start + k] = u + v;
        buf[start + k + len / 2] = u - v;
      }
    }
  }
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

// Critical-band integration weights on the Bark scale plus the equal-loudness
// curve, for one (frame length, sample rate) pair.
class BarkFilterbank {
 public:
  BarkFilterbank(std::size_t frame_samples, int sample_rate_hz)
      : nfft_(next_pow2(frame_samples)), rate_(sample_rate_hz) {
    const double nyquist_bark = hz_to_bark(rate_ / 2.0);
    n_bands_ = static_cast<std::size_t>(std::ceil(nyquist_bark)) + 1;
    const double step = nyquist_bark / static_cast<double>(n_bands_ - 1);
    const std::size_t n_bins = nfft_ / 2 + 1;

    weights_ = Matrix(n_bands_, n_bins);
    equal_loudness_.resize(n_bands_);
    centers_bark_.resize(n_bands_);
    for (std::size_t b = 0; b < n_bands_; ++b) {
      const double center = step * static_cast<double>(b);
      centers_bark_[b] = center;
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double z = hz_to_bark(static_cast<double>(k) * rate_ / static_cast<double>(nfft_)) - center;
        // Flat 1-Bark top, skirts of +10 dB/Bark below and -25 dB/Bark above.
        const double lo = z - 0.5;
        const double hi = z + 0.5;
        weights_(b, k) = std::pow(10.0, std::min(0.0, std::min(hi, -2.5 * lo)));
      }
      const double fsq = std::pow(bark_to_hz(center), 2);
      equal_loudness_[b] = std::pow(fsq / (fsq + 1.6e5), 2) * ((fsq + 1.44e6) / (fsq + 9.61e6));
    }
  }

  std::size_t n_bands() const noexcept { return n_bands_; }
  std::size_t nfft() const noexcept { return nfft_; }
  const std::vector<double>& centers_bark() const noexcept { return centers_bark_; }

  std::vector<double> apply(std::span<const double> frame) const {
    require(!frame.empty(), ErrorCode::PreconditionFailed, "plp_spectrum: empty frame");
    const auto power = power_spectrum(frame, std::max(nfft_, next_pow2(frame.size())));
    std::vector<double> bands(n_bands_, 0.0);
    for (std::size_t b = 0; b < n_bands_; ++b) {
      double acc = 0.0;
      const auto w = weights_.row(b);
      for (std::size_t k = 0; k < w.size() && k < power.size(); ++k) acc += w[k] * power[k];
      bands[b] = acc * equal_loudness_[b];
    }
    // DC and Nyquist bands are unreliable after equal loudness; copy neighbours.
    if (n_bands_ >= 3) {
      bands.front() = bands[1];
      bands.back() = bands[n_bands_ - 2];
    }
    return bands;
  }

 private:
  std::size_t nfft_;
  double rate_;
  std::size_t n_bands_ = 0;
  Matrix weights_;
  std::vector<double> equal_loudness_;
  std::vector<double> centers_bark_;
};

inline std::vector<double> plp_spectrum(std::span<const double> frame, int sample_rate_hz) {
  return BarkFilterbank(frame.size(), sample_rate_hz).apply(frame);
}

// RASTA band-pass: H(z) = 0.1 (2 + z^-1 - z^-3 - 2 z^-4) / (1 - 0.98 z^-1),
// causal with zero initial state.
inline std::vector<double> rasta_filter(std::span<const double> trajectory) {
  static constexpr double kNum[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
  static constexpr double kPole = 0.98;
  std::vector<double> y(trajectory.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    double acc = kPole * prev;
    for (std::size_t k = 0; k < 5 && k <= t; ++k) acc += kNum[k] * trajectory[t - k];
    y[t] = acc;
    prev = acc;
  }
  return y;
}

struct LpcResult {
  std::vector<double> coeffs;      // a_0 = 1, a_1..a_p of A(z) = 1 + sum a_k z^-k
  std::vector<double> reflection;  // k_1..k_p
  double error = 0.0;              // final prediction-error power
};

inline LpcResult levinson_durbin(std::span<const double> autocorr, int order) {
  require(order >= 1 && autocorr.size() >= static_cast<std::size_t>(order) + 1, ErrorCode::PreconditionFailed,
          "levinson_durbin: need order + 1 autocorrelation lags");
  LpcResult res;
  res.coeffs.assign(static_cast<std::size_t>(order) + 1, 0.0);
  res.coeffs[0] = 1.0;
  res.reflection.assign(static_cast<std::size_t>(order), 0.0);
  double err = autocorr[0];
  require(err > 0.0 && std::isfinite(err), ErrorCode::SingularToeplitz, "zero-energy autocorrelation");

  std::vector<double> prev(res.coeffs);
  for (int i = 1; i <= order; ++i) {
    double acc = autocorr[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j) acc += prev[static_cast<std::size_t>(j)] * autocorr[static_cast<std::size_t>(i - j)];
    const double k = -acc / err;
    res.reflection[static_cast<std::size_t>(i - 1)] = k;
    for (int j = 1; j < i; ++j)
      res.coeffs[static_cast<std::size_t>(j)] = prev[static_cast<std::size_t>(j)] + k * prev[static_cast<std::size_t>(i - j)];
    res.coeffs[static_cast<std::size_t>(i)] = k;
    err *= (1.0 - k * k);
    require(err > 0.0, ErrorCode::SingularToeplitz, "prediction error vanished at order " + std::to_string(i));
    prev = res.coeffs;
  }
  res.error = err;
  return res;
}

// Cepstrum of the all-pole model gain / A(z): c_0 = ln(gain) and
// c_n = -a_n - sum_{k=1}^{n-1} (k/n) c_k a_{n-k}.
inline std::vector<double> lpc_to_cepstrum(const LpcResult& lpc, int n_cepstra) {
  const auto& a = lpc.coeffs;
  const int p = static_cast<int>(a.size()) - 1;
  std::vector<double> c(static_cast<std::size_t>(n_cepstra), 0.0);
  c[0] = std::log(lpc.error);
  for (int n = 1; n < n_cepstra; ++n) {
    double acc = n <= p ? -a[static_cast<std::size_t>(n)] : 0.0;
    for (int k = 1; k < n; ++k) {
      if (n - k > p) continue;
      acc -= (static_cast<double>(k) / n) * c[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(n - k)];
    }
    c[static_cast<std::size_t>(n)] = acc;
  }
  return c;
}

// Autocorrelation of the spectrum treated as one half of a real even spectrum
// sampled at 2 (n_bands - 1) points.
inline std::vector<double> spectrum_autocorrelation(std::span<const double> spectrum, int lags) {
  const std::size_t nb = spectrum.size();
  const std::size_t m = 2 * (nb - 1);
  std::vector<double> r(static_cast<std::size_t>(lags) + 1, 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = j < nb ? spectrum[j] : spectrum[m - j];
      acc += v * std::cos(2.0 * std::numbers::pi * static_cast<double>(k * j % m) / static_cast<double>(m));
    }
    r[k] = acc / static_cast<double>(m);
  }
  return r;
}

// Cube-root loudness compression, autocorrelation, order-p Levinson-Durbin,
// then cepstral recursion.
inline std::vector<double> plp_cepstra(std::span<const double> bark_energies, const FrontendConfig& cfg) {
  require(bark_energies.size() >= static_cast<std::size_t>(cfg.model_order) + 1, ErrorCode::PreconditionFailed,
          "plp_cepstra: fewer bands than model_order + 1");
  std::vector<double> compressed(bark_energies.size());
  for (std::size_t i = 0; i < compressed.size(); ++i) {
    require(bark_energies[i] >= 0.0, ErrorCode::PreconditionFailed, "plp_cepstra: negative band energy");
    compressed[i] = std::cbrt(bark_energies[i]);
  }
  const auto r = spectrum_autocorrelation(compressed, cfg.model_order);
  return lpc_to_cepstrum(levinson_durbin(r, cfg.model_order), cfg.n_cepstra);
}

inline UtteranceFeature assemble_utterance(const std::vector<std::vector<double>>& cepstra, int n_cepstra,
                                           int target_frames) {
  require(!cepstra.empty(), ErrorCode::PreconditionFailed, "assemble_utterance: no frames");
  require(n_cepstra >= 1 && target_frames >= 1, ErrorCode::InvalidConfig, "assemble_utterance: bad dimensions");
  UtteranceFeature out;
  out.values.assign(static_cast<std::size_t>(n_cepstra) * static_cast<std::size_t>(target_frames), 0.0);
  out.n_valid_frames = static_cast<int>(std::min<std::size_t>(cepstra.size(), static_cast<std::size_t>(target_frames)));
  for (int f = 0; f < out.n_valid_frames; ++f) {
    const auto& frame = cepstra[static_cast<std::size_t>(f)];
    require(frame.size() == static_cast<std::size_t>(n_cepstra), ErrorCode::DimensionMismatch,
            "assemble_utterance: cepstral frame width");
    std::copy(frame.begin(), frame.end(), out.values.begin() + static_cast<std::ptrdiff_t>(f) * n_cepstra);
  }
  return out;
}

// Full per-utterance analysis up to (unpadded) per-frame cepstra.
inline std::vector<std::vector<double>> extract_cepstra(const AudioSignal& signal, const FrontendConfig& cfg) {
  const auto trimmed = trim_silence(frame_signal(signal, cfg), cfg);
  const BarkFilterbank bank(trimmed.frame_samples, signal.sample_rate_hz);
  const std::size_t n_frames = trimmed.n_frames();
  const std::size_t n_bands = bank.n_bands();

  Matrix bands(n_frames, n_bands);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto e = bank.apply(trimmed.frames.row(f));
    std::copy(e.begin(), e.end(), bands.row(f).begin());
  }

  constexpr double kFloor = 1e-12;
  if (cfg.rasta_enabled) {
    std::vector<double> trajectory(n_frames);
    for (std::size_t b = 0; b < n_bands; ++b) {
      for (std::size_t f = 0; f < n_frames; ++f) trajectory[f] = std::log(std::max(bands(f, b), kFloor));
      const auto filtered = rasta_filter(trajectory);
      for (std::size_t f = 0; f < n_frames; ++f) bands(f, b) = std::exp(filtered[f]);
    }
  } else {
    for (auto& v : bands.data()) v = std::max(v, kFloor);
  }

  std::vector<std::vector<double>> out;
  out.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) out.push_back(plp_cepstra(bands.row(f), cfg));
  return out;
}

inline UtteranceFeature extract_utterance(const AudioSignal& signal, const FrontendConfig& cfg, int target_frames) {
  return assemble_utterance(extract_cepstra(signal, cfg), cfg.n_cepstra, target_frames);
}

}  // namespace asrlab

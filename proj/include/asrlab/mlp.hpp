#pragma once

// Three-layer perceptron (sigmoid hidden layer, softmax output) trained with
// cross-entropy by stochastic gradient descent. Outputs are word posteriors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asrlab/error.hpp"
#include "asrlab/linalg.hpp"
#include "asrlab/rng.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

struct MlpConfig {
  int n_input = 64;
  int n_hidden = 64;
  int n_output = 20;
  double lr = 0.01;
  int epochs = 200;
  int batch_size = 1;
  std::uint64_t seed = 7;
  double init_scale = 0.0;  // 0 means 1/sqrt(fan_in) per layer
  double momentum = 0.0;
  // Train on z-scored inputs and fold the scaling back into W1/b1 afterwards;
  // the returned model always consumes raw inputs.
  bool standardize_inputs = true;

  void validate() const {
    require(n_input >= 1 && n_hidden >= 1 && n_output >= 1, ErrorCode::InvalidConfig, "mlp: dims must be >= 1");
    require(lr > 0, ErrorCode::InvalidConfig, "mlp: lr must be > 0");
    require(epochs >= 0, ErrorCode::InvalidConfig, "mlp: epochs must be >= 0");
    require(batch_size >= 1, ErrorCode::InvalidConfig, "mlp: batch_size must be >= 1");
    require(momentum >= 0 && momentum < 1, ErrorCode::InvalidConfig, "mlp: momentum must be in [0, 1)");
  }
};

struct MlpModel {
  Matrix w1;  // hidden x input
  Vector b1;
  Matrix w2;  // output x hidden
  Vector b2;

  std::size_t n_input() const { return w1.cols(); }
  std::size_t n_hidden() const { return w1.rows(); }
  std::size_t n_output() const { return w2.rows(); }

  static MlpModel zeros(std::size_t in, std::size_t hidden, std::size_t out) {
    return {Matrix(hidden, in), Vector(hidden, 0.0), Matrix(out, hidden), Vector(out, 0.0)};
  }

  // Visits every parameter in the persisted order W1, b1, W2, b2.
  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& v : w1.data()) f(v);
    for (auto& v : b1) f(v);
    for (auto& v : w2.data()) f(v);
    for (auto& v : b2) f(v);
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline void softmax_inplace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (auto& v : z) {
    v = std::exp(v - m);
    total += v;
  }
  for (auto& v : z) v /= total;
}

struct MlpActivations {
  Vector hidden;
  Vector output;
};

inline MlpActivations mlp_forward_detailed(const MlpModel& model, std::span<const double> x) {
  require(x.size() == model.n_input(), ErrorCode::DimensionMismatch,
          "mlp: input width " + std::to_string(x.size()) + " vs " + std::to_string(model.n_input()));
  MlpActivations act;
  act.hidden.resize(model.n_hidden());
  for (std::size_t j = 0; j < model.n_hidden(); ++j) {
    double z = model.b1[j];
    const auto w = model.w1.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
    act.hidden[j] = sigmoid(z);
  }
  act.output.resize(model.n_output());
  for (std::size_t k = 0; k < model.n_output(); ++k) {
    double z = model.b2[k];
    const auto w = model.w2.row(k);
    for (std::size_t j = 0; j < act.hidden.size(); ++j) z += w[j] * act.hidden[j];
    act.output[k] = z;
  }
  softmax_inplace(act.output);
  return act;
}

inline Vector mlp_forward(const MlpModel& model, std::span<const double> x) {
  return mlp_forward_detailed(model, x).output;
}

inline Matrix mlp_posteriors(const MlpModel& model, const Matrix& inputs) {
  Matrix out(inputs.rows(), model.n_output());
  if (inputs.rows() > 0)
    require(inputs.cols() == model.n_input(), ErrorCode::DimensionMismatch, "mlp_posteriors: input width");
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    const auto y = mlp_forward(model, inputs.row(t));
    std::copy(y.begin(), y.end(), out.row(t).begin());
  }
  return out;
}

inline double mlp_loss(const MlpModel& model, std::span<const double> x, std::size_t label) {
  require(label < model.n_output(), ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
  return -std::log(std::max(mlp_forward(model, x)[label], 1e-300));
}

// Cross-entropy gradient for one sample, accumulated into grad (same shape
// as the model).
inline void mlp_accumulate_gradient(const MlpModel& model, std::span<const double> x, std::size_t label,
                                    MlpModel& grad) {
  require(label < model.n_output(), ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
  const auto act = mlp_forward_detailed(model, x);
  Vector delta_out = act.output;
  delta_out[label] -= 1.0;

  Vector delta_hidden(model.n_hidden(), 0.0);
  for (std::size_t k = 0; k < model.n_output(); ++k) {
    const auto w = model.w2.row(k);
    auto g = grad.w2.row(k);
    for (std::size_t j = 0; j < model.n_hidden(); ++j) {
      g[j] += delta_out[k] * act.hidden[j];
      delta_hidden[j] += delta_out[k] * w[j];
    }
    grad.b2[k] += delta_out[k];
  }
  for (std::size_t j = 0; j < model.n_hidden(); ++j) {
    const double d = delta_hidden[j] * act.hidden[j] * (1.0 - act.hidden[j]);
    auto g = grad.w1.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] += d * x[i];
    grad.b1[j] += d;
  }
}

inline MlpModel mlp_gradient(const MlpModel& model, std::span<const double> x, std::size_t label) {
  auto grad = MlpModel::zeros(model.n_input(), model.n_hidden(), model.n_output());
  mlp_accumulate_gradient(model, x, label, grad);
  return grad;
}

inline MlpModel mlp_init(const MlpConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  auto model = MlpModel::zeros(static_cast<std::size_t>(cfg.n_input), static_cast<std::size_t>(cfg.n_hidden),
                               static_cast<std::size_t>(cfg.n_output));
  const double s1 = cfg.init_scale > 0 ? cfg.init_scale : 1.0 / std::sqrt(static_cast<double>(cfg.n_input));
  const double s2 = cfg.init_scale > 0 ? cfg.init_scale : 1.0 / std::sqrt(static_cast<double>(cfg.n_hidden));
  std::uniform_real_distribution<double> u1(-s1, s1), u2(-s2, s2);
  for (auto& v : model.w1.data()) v = u1(rng);
  for (auto& v : model.w2.data()) v = u2(rng);
  return model;
}

inline double mlp_mean_loss(const MlpModel& model, const Matrix& inputs, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.rows(); ++i)
    total += mlp_loss(model, inputs.row(i), static_cast<std::size_t>(labels[i]));
  return total / static_cast<double>(inputs.rows());
}

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> epoch_losses;  // mean cross-entropy over the set after each epoch
};

struct InputScaling {
  Vector mean;
  Vector scale;  // standard deviation, 1 for constant columns
};

inline InputScaling fit_input_scaling(const Matrix& inputs) {
  const std::size_t n = inputs.rows(), d = inputs.cols();
  InputScaling s{Vector(d, 0.0), Vector(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += inputs(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.scale[j] += (inputs(i, j) - s.mean[j]) * (inputs(i, j) - s.mean[j]);
  for (auto& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

inline Matrix apply_input_scaling(const Matrix& inputs, const InputScaling& s) {
  Matrix out = inputs;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - s.mean[j]) / s.scale[j];
  return out;
}

// W1 (x - mu) / sd + b1  ==  (W1 / sd) x + (b1 - W1 mu / sd)
inline void fold_input_scaling(MlpModel& model, const InputScaling& s) {
  for (std::size_t h = 0; h < model.n_hidden(); ++h) {
    auto w = model.w1.row(h);
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] /= s.scale[j];
      model.b1[h] -= w[j] * s.mean[j];
    }
  }
}

// Mini-batch gradients are summed in the (seeded) visiting order, so results
// are bit-reproducible for any batch size.
inline MlpTrainResult mlp_train(const Matrix& raw_inputs, std::span<const int> labels, const MlpConfig& cfg) {
  cfg.validate();
  require(raw_inputs.rows() > 0, ErrorCode::PreconditionFailed, "mlp_train: empty dataset");
  require(raw_inputs.cols() == static_cast<std::size_t>(cfg.n_input), ErrorCode::DimensionMismatch,
          "mlp_train: input width");
  std::optional<InputScaling> scaling;
  if (cfg.standardize_inputs) scaling = fit_input_scaling(raw_inputs);
  const Matrix inputs = scaling ? apply_input_scaling(raw_inputs, *scaling) : raw_inputs;
  require(labels.size() == inputs.rows(), ErrorCode::DimensionMismatch, "mlp_train: label count");
  for (int y : labels)
    require(y >= 0 && y < cfg.n_output, ErrorCode::LabelOutOfRange, "label " + std::to_string(y));

  MlpTrainResult result;
  result.model = mlp_init(cfg);
  auto& model = result.model;
  Rng rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(inputs.rows());
  std::iota(order.begin(), order.end(), 0);

  auto grad = MlpModel::zeros(model.n_input(), model.n_hidden(), model.n_output());
  auto velocity = grad;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  auto apply = [&](std::size_t count) {
    const double step = cfg.lr / static_cast<double>(count);
    auto update = [&](std::vector<double>& w, std::vector<double>& g, std::vector<double>& v) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = cfg.momentum * v[i] - step * g[i];
        w[i] += v[i];
        g[i] = 0.0;
      }
    };
    update(model.w1.data(), grad.w1.data(), velocity.w1.data());
    update(model.b1, grad.b1, velocity.b1);
    update(model.w2.data(), grad.w2.data(), velocity.w2.data());
    update(model.b2, grad.b2, velocity.b2);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t pending = 0;
    for (std::size_t idx : order) {
      mlp_accumulate_gradient(model, inputs.row(idx), static_cast<std::size_t>(labels[idx]), grad);
      if (++pending == batch) {
        apply(pending);
        pending = 0;
      }
    }
    if (pending > 0) apply(pending);
    result.epoch_losses.push_back(mlp_mean_loss(model, inputs, labels));
  }
  if (scaling) fold_input_scaling(model, *scaling);
  return result;
}

// Layout: "AMLP", version, n_input, n_hidden, n_output (u32), then W1, b1,
// W2, b2 row-major as little-endian f64.
inline constexpr std::uint32_t kMlpFileVersion = 1;

inline std::vector<char> encode_mlp(const MlpModel& m) {
  io::BinaryWriter w;
  w.magic("AMLP");
  w.u32(kMlpFileVersion);
  w.u32(static_cast<std::uint32_t>(m.n_input()));
  w.u32(static_cast<std::uint32_t>(m.n_hidden()));
  w.u32(static_cast<std::uint32_t>(m.n_output()));
  w.f64s(m.w1.data());
  w.f64s(m.b1);
  w.f64s(m.w2.data());
  w.f64s(m.b2);
  return w.bytes();
}

inline MlpModel decode_mlp(io::BinaryReader r) {
  r.expect_magic("AMLP");
  require(r.u32() == kMlpFileVersion, ErrorCode::ParseError, "unsupported mlp version");
  const std::size_t in = r.u32(), hidden = r.u32(), out = r.u32();
  auto m = MlpModel::zeros(in, hidden, out);
  m.w1.data() = r.f64s(in * hidden);
  m.b1 = r.f64s(hidden);
  m.w2.data() = r.f64s(hidden * out);
  m.b2 = r.f64s(out);
  r.expect_end();
  return m;
}

inline void save_mlp(const std::filesystem::path& path, const MlpModel& m) { io::write_bytes(path, encode_mlp(m)); }
inline MlpModel load_mlp(const std::filesystem::path& path) { return decode_mlp(io::BinaryReader::open(path)); }

inline std::string loss_history_csv(std::span<const double> losses) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i)
    out += std::to_string(i + 1) + ',' + io::format_double(losses[i]) + '\n';
  return out;
}

}  // namespace asrlab

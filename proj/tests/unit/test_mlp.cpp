#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "asrlab/mlp.hpp"
#include "oracles.hpp"

using namespace asrlab;

namespace {

MlpModel random_model(std::size_t in, std::size_t hid, std::size_t out, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  auto m = MlpModel::zeros(in, hid, out);
  m.for_each_parameter([&](double& v) { v = u(rng); });
  return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// 20 points, two classes split by the line x0 + x1 = 0 with a margin.
void separable_toy(Matrix& x, std::vector<int>& y) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  while (y.size() < 20) {
    const double a = u(rng), b = u(rng);
    if (std::abs(a + b) < 0.3) continue;
    x.append_row(std::vector<double>{a, b});
    y.push_back(a + b > 0 ? 1 : 0);
  }
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(MlpForward, PosteriorIsProbabilityVector) {
  const auto m = random_model(6, 5, 4, 1, 3.0);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto y = mlp_forward(m, random_vector(6, rng, 10.0));
    double s = 0.0;
    for (double v : y) {
      ASSERT_GT(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(MlpForward, ZeroModelIsUniform) {
  const auto m = MlpModel::zeros(3, 4, 5);
  for (double v : mlp_forward(m, std::vector<double>{1.0, -2.0, 0.5})) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(MlpForward, EqualLogitsGiveHalf) {
  auto m = MlpModel::zeros(2, 2, 2);
  m.w1(0, 0) = 0.7;
  m.w1(1, 1) = -1.3;
  for (std::size_t j = 0; j < 2; ++j) m.w2(0, j) = m.w2(1, j) = 0.4 + j;
  m.b2 = {0.25, 0.25};
  const auto y = mlp_forward(m, std::vector<double>{0.3, 0.9});
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
}

TEST(MlpForward, MatchesHandComputation) {
  auto m = MlpModel::zeros(2, 2, 2);
  m.w1(0, 0) = 1.0;
  m.w1(0, 1) = -1.0;
  m.w1(1, 0) = 0.5;
  m.b1 = {0.0, 0.25};
  m.w2(0, 0) = 2.0;
  m.w2(1, 1) = -1.0;
  m.b2 = {0.0, 0.5};
  const std::vector<double> x = {0.2, 0.6};
  const double h0 = 1.0 / (1.0 + std::exp(-(0.2 - 0.6)));
  const double h1 = 1.0 / (1.0 + std::exp(-(0.1 + 0.25)));
  const double z0 = 2.0 * h0, z1 = -h1 + 0.5;
  const auto y = mlp_forward(m, x);
  EXPECT_NEAR(y[0], std::exp(z0) / (std::exp(z0) + std::exp(z1)), 1e-15);
}

TEST(MlpForward, DimensionMismatch) {
  try {
    mlp_forward(MlpModel::zeros(3, 2, 2), std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(MlpPosteriors, EmptyAndSingle) {
  const auto m = random_model(3, 4, 2, 3);
  EXPECT_EQ(mlp_posteriors(m, Matrix(0, 3)).rows(), 0u);
  Matrix one;
  one.append_row(std::vector<double>{0.1, 0.2, 0.3});
  const auto p = mlp_posteriors(m, one);
  const auto y = mlp_forward(m, one.row(0));
  ASSERT_EQ(p.rows(), 1u);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(p(0, k), y[k]);
}

TEST(MlpPosteriors, BatchEqualsLoop) {
  const auto m = random_model(5, 7, 4, 4);
  std::mt19937_64 rng(1);
  Matrix x;
  for (int i = 0; i < 64; ++i) x.append_row(random_vector(5, rng, 2.0));
  const auto p = mlp_posteriors(m, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto y = mlp_forward(m, x.row(i));
    for (std::size_t k = 0; k < 4; ++k) ASSERT_EQ(p(i, k), y[k]);
  }
}

TEST(MlpGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(77);
  for (int net = 0; net < 20; ++net) {
    auto m = random_model(3, 4, 3, 100 + static_cast<std::uint64_t>(net));
    const auto x = random_vector(3, rng, 1.5);
    const std::size_t label = static_cast<std::size_t>(net % 3);
    auto grad = mlp_gradient(m, x, label);

    std::vector<double*> params;
    m.for_each_parameter([&](double& v) { params.push_back(&v); });
    std::vector<double> analytic;
    grad.for_each_parameter([&](double& v) { analytic.push_back(v); });
    const auto numeric = oracle::central_difference([&] { return mlp_loss(m, x, label); }, params, 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
      if (scale < 1e-7) continue;  // both vanish; relative error is meaningless
      ASSERT_LE(std::abs(analytic[i] - numeric[i]) / scale, 1e-4) << "net " << net << " param " << i;
    }
  }
}

TEST(MlpTrain, SeparableToyReachesFullAccuracy) {
  Matrix x;
  std::vector<int> y;
  separable_toy(x, y);

  // Witness: a logistic regression separates the set.
  oracle::Mat rows;
  for (std::size_t i = 0; i < x.rows(); ++i) rows.emplace_back(x.row(i).begin(), x.row(i).end());
  const auto [w, b] = oracle::logistic_fit(rows, y);
  for (std::size_t i = 0; i < rows.size(); ++i) ASSERT_EQ(w[0] * rows[i][0] + w[1] * rows[i][1] + b > 0, y[i] == 1);

  MlpConfig cfg;
  cfg.n_input = 2;
  cfg.n_hidden = 8;
  cfg.n_output = 2;
  cfg.lr = 0.01;
  cfg.epochs = 200;
  const auto res = mlp_train(x, y, cfg);
  for (std::size_t i = 0; i < x.rows(); ++i)
    EXPECT_EQ(argmax(mlp_forward(res.model, x.row(i))), static_cast<std::size_t>(y[i])) << "point " << i;
  ASSERT_EQ(res.epoch_losses.size(), 200u);
  EXPECT_LT(res.epoch_losses.back(), res.epoch_losses.front());
  for (double l : res.epoch_losses) EXPECT_TRUE(std::isfinite(l));
}

TEST(MlpTrain, MemorisesSingleton) {
  Matrix x;
  x.append_row(std::vector<double>{0.3, -0.7, 1.1});
  const std::vector<int> y = {2};
  MlpConfig cfg;
  cfg.n_input = 3;
  cfg.n_hidden = 4;
  cfg.n_output = 4;
  cfg.lr = 0.5;
  cfg.epochs = 200;
  EXPECT_GE(mlp_forward(mlp_train(x, y, cfg).model, x.row(0))[2], 0.99);
}

TEST(MlpTrain, Deterministic) {
  Matrix x;
  std::vector<int> y;
  separable_toy(x, y);
  MlpConfig cfg;
  cfg.n_input = 2;
  cfg.n_hidden = 5;
  cfg.n_output = 2;
  cfg.epochs = 30;
  EXPECT_EQ(mlp_train(x, y, cfg).model, mlp_train(x, y, cfg).model);
  cfg.batch_size = 4;
  cfg.momentum = 0.5;
  EXPECT_EQ(mlp_train(x, y, cfg).model, mlp_train(x, y, cfg).model);
}

TEST(MlpTrain, StandardisationIsFoldedIntoTheModel) {
  // Inputs far from zero mean and unit scale: the folded model must equal
  // the trained model applied to z-scored inputs.
  Matrix x;
  std::vector<int> y;
  separable_toy(x, y);
  for (auto& v : x.data()) v = 0.01 * v + 5.0;
  MlpConfig cfg;
  cfg.n_input = 2;
  cfg.n_hidden = 3;
  cfg.n_output = 2;
  cfg.epochs = 5;
  const auto folded = mlp_train(x, y, cfg).model;

  const auto scaling = fit_input_scaling(x);
  cfg.standardize_inputs = false;
  const auto raw = mlp_train(apply_input_scaling(x, scaling), y, cfg).model;
  const auto z = apply_input_scaling(x, scaling);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto a = mlp_forward(folded, x.row(i)), b = mlp_forward(raw, z.row(i));
    for (std::size_t k = 0; k < 2; ++k) ASSERT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(MlpTrain, LabelOutOfRange) {
  Matrix x;
  x.append_row(std::vector<double>{1.0, 2.0});
  MlpConfig cfg;
  cfg.n_input = 2;
  cfg.n_output = 3;
  const std::vector<int> y = {3};
  try {
    mlp_train(x, y, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelOutOfRange);
  }
}

TEST(MlpTrain, InitialisationRange) {
  MlpConfig cfg;
  cfg.n_input = 16;
  cfg.n_hidden = 25;
  cfg.n_output = 3;
  auto m = mlp_init(cfg);
  for (double v : m.w1.data()) ASSERT_LE(std::abs(v), 0.25);
  for (double v : m.w2.data()) ASSERT_LE(std::abs(v), 0.2);
  for (double v : m.b1) ASSERT_EQ(v, 0.0);
  for (double v : m.b2) ASSERT_EQ(v, 0.0);
}

TEST(MlpFile, RoundTripAndLossCsv) {
  const auto dir = oracle::temp_dir("mlp");
  const auto m = random_model(4, 3, 5, 9);
  save_mlp(dir / "mlp.model", m);
  EXPECT_EQ(load_mlp(dir / "mlp.model"), m);
  const std::vector<double> losses = {2.5, 1.25};
  EXPECT_EQ(loss_history_csv(losses), "epoch,loss\n1,2.5\n2,1.25\n");
}

TEST(MlpFile, RejectsWrongMagic) {
  const auto dir = oracle::temp_dir("mlp_bad");
  auto bytes = encode_mlp(random_model(2, 2, 2, 1));
  bytes[0] = 'X';
  io::write_bytes(dir / "bad.model", bytes);
  EXPECT_THROW(load_mlp(dir / "bad.model"), Error);
}

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lattice/error.hpp"
#include "lattice/nn/adam.hpp"
#include "lattice/nn/loss.hpp"
#include "lattice/nn/models.hpp"
#include "lattice/nn/scaler.hpp"

using namespace lattice;
using namespace lattice::nn;
using lattice::testing::check_gradients;
using lattice::testing::random_matrix;
using lattice::testing::randomize;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double weighted_sum(const Matrix& y, const Matrix& r) { return (y.array() * r.array()).sum(); }

}  // namespace

TEST_CASE("dense forward against a triple loop") {
  std::mt19937_64 rng(1);
  DenseLayer d(5, 3, Activation::Identity);
  randomize(d.params("d"), rng, 1.0);
  const Matrix x = random_matrix(rng, 4, 5);
  const Matrix y = d.forward(x);
  for (int b = 0; b < 4; ++b)
    for (int o = 0; o < 3; ++o) {
      double s = d.bias[o];
      for (int i = 0; i < 5; ++i) s += x(b, i) * d.weight(o, i);
      CHECK(y(b, o) == doctest::Approx(s).epsilon(1e-12));
    }

  DenseLayer id(3, 3, Activation::Identity);
  id.weight.setIdentity();
  id.bias.setZero();
  const Matrix v = random_matrix(rng, 2, 3);
  CHECK(id.forward(v) == v);

  DenseLayer relu(3, 3, Activation::ReLU);
  relu.weight = -Matrix::Identity(3, 3);
  relu.bias.setZero();
  Matrix pos(1, 3);
  pos << 1.0, 2.0, 3.0;
  CHECK(relu.forward(pos).isZero());

  CHECK(dense_param_count(2, 3) == 9);
  CHECK(DenseLayer(2, 3, Activation::ReLU).param_count() == 9);
  CHECK_THROWS_AS(d.forward(random_matrix(rng, 2, 4)), ContractViolation);
}

TEST_CASE("dense gradients match finite differences") {
  std::mt19937_64 rng(2);
  for (Activation act : {Activation::Identity, Activation::ReLU, Activation::Sigmoid, Activation::Tanh}) {
    for (int trial = 0; trial < 5; ++trial) {
      DenseLayer d(4, 3, act);
      auto blocks = d.params("d");
      randomize(blocks, rng, 0.7);
      Matrix x = random_matrix(rng, 6, 4);
      const Matrix r = random_matrix(rng, 6, 3);
      Matrix dx;
      auto analytic = [&] {
        d.zero_grad();
        DenseCache c;
        const Matrix y = d.forward(x, &c);
        dx = d.backward(c, r);
        return weighted_sum(y, r);
      };
      auto loss = [&] { return weighted_sum(d.forward(x), r); };
      const auto res = check_gradients(blocks, analytic, loss);
      CHECK_MESSAGE(res.ok(), activation_name(act), " ", res.worst);

      Matrix dx_copy = dx;
      std::vector<ParamBlock> xb{{"x", x.data(), dx_copy.data(), static_cast<std::size_t>(x.size())}};
      const auto rx = check_gradients(xb, [&] { return loss(); }, loss);
      CHECK_MESSAGE(rx.ok(), "input ", rx.worst);
    }
  }
}

TEST_CASE("gru step against a scalar oracle") {
  std::mt19937_64 rng(3);
  const int m = 3, n = 4;
  GruLayer g(m, n);
  randomize(g.params("g"), rng, 0.6);
  Vector x = random_matrix(rng, m, 1).col(0);
  Vector h = random_matrix(rng, n, 1).col(0);
  const Vector got = g.step(x, h);
  for (int k = 0; k < n; ++k) {
    auto lin = [&](int gate, bool rec) {
      double s = rec ? g.recurrent_bias[gate * n + k] : g.input_bias[gate * n + k];
      if (rec) {
        for (int j = 0; j < n; ++j) s += g.recurrent_weight(gate * n + k, j) * h[j];
      } else {
        for (int j = 0; j < m; ++j) s += g.input_weight(gate * n + k, j) * x[j];
      }
      return s;
    };
    const double z = sigmoid(lin(0, false) + lin(0, true));
    const double r = sigmoid(lin(1, false) + lin(1, true));
    const double c = std::tanh(lin(2, false) + r * lin(2, true));
    CHECK(got[k] == doctest::Approx(z * h[k] + (1 - z) * c).epsilon(1e-12));
  }
}

TEST_CASE("gru sequence forward equals repeated steps") {
  std::mt19937_64 rng(4);
  const int m = 5, n = 6, T = 7, B = 3;
  GruLayer g(m, n);
  randomize(g.params("g"), rng, 0.5);
  const Matrix x = random_matrix(rng, T * B, m);
  const Matrix hs = g.forward(x, T, B);
  for (int b = 0; b < B; ++b) {
    Vector h = Vector::Zero(n);
    for (int t = 0; t < T; ++t) {
      h = g.step(x.row(t * B + b).transpose(), h);
      for (int k = 0; k < n; ++k) CHECK(hs(t * B + b, k) == doctest::Approx(h[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gru special cases") {
  SUBCASE("all-zero weights keep the state at zero") {
    GruLayer g(4, 3);
    for (auto& b : g.params("g")) std::fill(b.value, b.value + b.size, 0.0);
    std::mt19937_64 rng(5);
    const Matrix out = g.forward(random_matrix(rng, 10 * 2, 4), 10, 2);
    CHECK(out.isZero());
  }
  SUBCASE("saturated update gate carries the state") {
    std::mt19937_64 rng(6);
    GruLayer g(2, 3);
    randomize(g.params("g"), rng, 0.5);
    g.input_bias.head(3).setConstant(50.0);
    const Vector h = random_matrix(rng, 3, 1).col(0);
    const Vector x = random_matrix(rng, 2, 1).col(0);
    CHECK((g.step(x, h) - h).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("zero upstream gradient gives zero parameter gradients") {
    std::mt19937_64 rng(7);
    GruLayer g(3, 4);
    randomize(g.params("g"), rng, 0.5);
    GruCache c;
    const Matrix h = g.forward(random_matrix(rng, 5 * 2, 3), 5, 2, &c);
    g.zero_grad();
    const Matrix dx = g.backward(c, Matrix::Zero(h.rows(), h.cols()));
    CHECK(dx.isZero());
    for (auto& b : g.params("g"))
      for (std::size_t i = 0; i < b.size; ++i) CHECK(b.grad[i] == 0.0);
  }
  SUBCASE("backward without a cache is rejected") {
    GruLayer g(3, 4);
    CHECK_THROWS_AS(g.backward(GruCache{}, Matrix::Zero(2, 4)), ContractViolation);
  }
}

TEST_CASE("single-step gru gradients by hand") {
  // With h_prev = 0: h = (1 - z) c, z = s(Wz x + bxz + bhz),
  // r = s(Wr x + bxr + bhr), c = tanh(Wh x + bxh + r bhh).
  std::mt19937_64 rng(8);
  const int m = 3, n = 2;
  GruLayer g(m, n);
  randomize(g.params("g"), rng, 0.8);
  const Matrix x = random_matrix(rng, 1, m);
  const Matrix up = random_matrix(rng, 1, n);
  GruCache cache;
  g.forward(x, 1, 1, &cache);
  g.zero_grad();
  g.backward(cache, up);
  for (int k = 0; k < n; ++k) {
    double az = g.input_bias[k] + g.recurrent_bias[k];
    double ar = g.input_bias[n + k] + g.recurrent_bias[n + k];
    double ah = g.input_bias[2 * n + k];
    for (int j = 0; j < m; ++j) {
      az += g.input_weight(k, j) * x(0, j);
      ar += g.input_weight(n + k, j) * x(0, j);
      ah += g.input_weight(2 * n + k, j) * x(0, j);
    }
    const double z = sigmoid(az), r = sigmoid(ar);
    const double bhh = g.recurrent_bias[2 * n + k];
    const double c = std::tanh(ah + r * bhh);
    const double dh = up(0, k);
    const double dz = dh * -c * z * (1 - z);
    const double dc = dh * (1 - z) * (1 - c * c);
    const double dr = dc * bhh * r * (1 - r);
    for (int j = 0; j < m; ++j) {
      CHECK(g.grad_input_weight(k, j) == doctest::Approx(dz * x(0, j)).epsilon(1e-12));
      CHECK(g.grad_input_weight(n + k, j) == doctest::Approx(dr * x(0, j)).epsilon(1e-12));
      CHECK(g.grad_input_weight(2 * n + k, j) == doctest::Approx(dc * x(0, j)).epsilon(1e-12));
    }
    CHECK(g.grad_recurrent_bias[2 * n + k] == doctest::Approx(dc * r).epsilon(1e-12));
    CHECK(g.grad_recurrent_bias[n + k] == doctest::Approx(dr).epsilon(1e-12));
    CHECK(g.grad_input_bias[k] == doctest::Approx(dz).epsilon(1e-12));
    // h_prev = 0, so U receives nothing.
    for (int j = 0; j < n; ++j) CHECK(g.grad_recurrent_weight(k, j) == 0.0);
  }
}

TEST_CASE("gru gradients match finite differences") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 6; ++trial) {
    const int m = 3 + trial % 3, n = 2 + trial % 4, T = 2 + trial, B = 1 + trial % 3;
    GruLayer g(m, n);
    auto blocks = g.params("g");
    randomize(blocks, rng, 0.6);
    Matrix x = random_matrix(rng, T * B, m);
    const Matrix r = random_matrix(rng, T * B, n);
    Matrix dx;
    auto analytic = [&] {
      g.zero_grad();
      GruCache c;
      const Matrix h = g.forward(x, T, B, &c);
      dx = g.backward(c, r);
      return weighted_sum(h, r);
    };
    auto loss = [&] { return weighted_sum(g.forward(x, T, B), r); };
    const auto res = check_gradients(blocks, analytic, loss);
    CHECK_MESSAGE(res.ok(), res.worst);

    Matrix dx_copy = dx;
    std::vector<ParamBlock> xb{{"x", x.data(), dx_copy.data(), static_cast<std::size_t>(x.size())}};
    const auto rx = check_gradients(xb, [&] { return loss(); }, loss);
    CHECK_MESSAGE(rx.ok(), "input ", rx.worst);
  }
}

TEST_CASE("stacked model gradients under both losses") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 4; ++trial) {
    SequenceModel model(SequenceModelSpec{4, {5, 3, 4}, 2});
    auto blocks = model.params();
    randomize(blocks, rng, 0.5);
    const int T = 3, B = 2;
    const Matrix x = random_matrix(rng, T * B, 4);
    const Matrix y = random_matrix(rng, T * B, 2);
    for (bool mae : {false, true}) {
      auto analytic = [&] {
        model.zero_grad();
        SequenceModel::Cache c;
        const Matrix p = model.forward(x, T, B, &c);
        const LossResult l = mae ? mae_loss(p, y) : mse_loss(p, y);
        model.backward(c, l.grad);
        return l.value;
      };
      auto loss = [&] {
        const Matrix p = model.forward(x, T, B);
        return mae ? mae_value(p, y) : mse_value(p, y);
      };
      const auto res = check_gradients(blocks, analytic, loss);
      CHECK_MESSAGE(res.ok(), (mae ? "mae " : "mse "), res.worst);
    }
  }
}

TEST_CASE("autoencoder gradients") {
  std::mt19937_64 rng(11);
  Autoencoder ae(12, 5);
  auto blocks = ae.params();
  randomize(blocks, rng, 0.5);
  std::uniform_int_distribution<int> bit(0, 1);
  Matrix x(3, 12);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = bit(rng);
  auto analytic = [&] {
    ae.zero_grad();
    Autoencoder::Cache c;
    const LossResult l = mse_loss(ae.forward(x, &c), x);
    ae.backward(c, l.grad);
    return l.value;
  };
  auto loss = [&] { return mse_value(ae.forward(x), x); };
  const auto res = check_gradients(blocks, analytic, loss);
  CHECK_MESSAGE(res.ok(), res.worst);
}

TEST_CASE("losses") {
  std::mt19937_64 rng(12);
  const Matrix a = random_matrix(rng, 7, 3);
  CHECK(mae_value(a, a) == 0.0);
  CHECK(mse_value(a, a) == 0.0);
  const Matrix shifted = a.array() + 0.25;
  CHECK(mae_value(shifted, a) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(mse_value(shifted, a) == doctest::Approx(0.0625).epsilon(1e-14));

  const Matrix b = random_matrix(rng, 7, 3);
  double sa = 0.0, ss = 0.0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) {
      sa += std::abs(a(i, j) - b(i, j));
      ss += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    }
  CHECK(mae_value(a, b) == doctest::Approx(sa / 21).epsilon(1e-14));
  CHECK(mse_value(a, b) == doctest::Approx(ss / 21).epsilon(1e-14));
  CHECK(mae_loss(a, b).value == mae_value(a, b));

  CHECK(mae_loss(a, a).grad.isZero());
  CHECK_THROWS_AS(mae_value(a, random_matrix(rng, 7, 2)), ContractViolation);
  CHECK_THROWS_AS(mse_loss(a, random_matrix(rng, 6, 3)), ContractViolation);
}

TEST_CASE("adam first step by hand") {
  std::vector<double> p = {1.0, -2.0, 0.5}, g = {0.3, -0.1, 0.0};
  std::vector<ParamBlock> blocks{{"p", p.data(), g.data(), 3}};
  AdamConfig cfg;
  cfg.lr0 = 0.01;
  cfg.decay = 0.0;
  Adam opt(cfg, blocks);
  CHECK(opt.current_lr() == 0.01);
  opt.step(blocks);
  // Bias-corrected moments equal g and g^2 after one step.
  CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.01 * 0.1 / (0.1 + 1e-8)).epsilon(1e-14));
  CHECK(p[2] == 0.5);
  CHECK(opt.state().t == 1);
  CHECK(opt.state().m[0][0] == doctest::Approx(0.1 * 0.3).epsilon(1e-14));
  CHECK(opt.state().v[0][0] == doctest::Approx(0.001 * 0.09).epsilon(1e-14));

  // Second step against a hand-rolled recurrence.
  g = {0.2, 0.4, -0.3};
  const double m1 = 0.9 * 0.03 + 0.1 * 0.2, v1 = 0.999 * 0.00009 + 0.001 * 0.04;
  const double expect = p[0] - 0.01 * (m1 / (1 - 0.81)) / (std::sqrt(v1 / (1 - 0.999 * 0.999)) + 1e-8);
  opt.step(blocks);
  CHECK(p[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("adam schedule, zero gradients and bad gradients") {
  std::vector<double> p = {1.0, 2.0}, g = {0.0, 0.0};
  std::vector<ParamBlock> blocks{{"p", p.data(), g.data(), 2}};
  AdamConfig cfg;
  cfg.decay = 0.1;
  cfg.steps_per_epoch = 10;
  Adam opt(cfg, blocks);
  for (int i = 0; i < 25; ++i) opt.step(blocks);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 2.0);
  CHECK(opt.state().t == 25);
  CHECK(opt.current_lr() == doctest::Approx(1e-3 / 1.2).epsilon(1e-14));

  g = {0.1, std::nan("")};
  CHECK_THROWS_AS(opt.step(blocks), NumericalError);
  CHECK(p[0] == 1.0);
  CHECK(opt.state().t == 25);

  std::vector<double> q = {0.7, -0.3}, gq = {5.0, -1.0};
  std::vector<ParamBlock> qb{{"q", q.data(), gq.data(), 2}};
  AdamConfig frozen;
  frozen.lr0 = 0.0;
  Adam still(frozen, qb);
  for (int i = 0; i < 5; ++i) still.step(qb);
  CHECK(q[0] == 0.7);
  CHECK(q[1] == -0.3);
}

TEST_CASE("scaler") {
  std::mt19937_64 rng(13);
  Matrix rows = random_matrix(rng, 40, 3, 2.0);
  rows.col(1).setConstant(4.5);
  const ScalerParams s = scaler_fit(rows);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (int i = 0; i < 40; ++i) mean += rows(i, c);
    mean /= 40;
    double var = 0.0;
    for (int i = 0; i < 40; ++i) var += (rows(i, c) - mean) * (rows(i, c) - mean);
    CHECK(s.mean[c] == doctest::Approx(mean).epsilon(1e-12));
    if (c == 1) {
      CHECK(s.std[c] == 1.0);
    } else {
      CHECK(s.std[c] == doctest::Approx(std::sqrt(var / 40)).epsilon(1e-12));
    }
  }
  Matrix t = rows;
  s.apply(t);
  CHECK(t.col(1).isZero());
  CHECK(std::abs(t.col(0).mean()) < 1e-12);
  s.invert(t);
  CHECK((t - rows).cwiseAbs().maxCoeff() < 1e-12);

  MomentAccumulator acc(3);
  acc.add_rows(rows.topRows(17));
  for (int i = 17; i < 40; ++i) acc.add_row(rows.row(i).data());
  const ScalerParams w = acc.finish();
  CHECK(acc.count() == 40);
  for (int c = 0; c < 3; ++c) {
    CHECK(w.mean[c] == doctest::Approx(s.mean[c]).epsilon(1e-12));
    CHECK(w.std[c] == doctest::Approx(s.std[c]).epsilon(1e-12));
  }
  CHECK_THROWS(scaler_fit(Matrix(0, 3)));
  CHECK_THROWS(MomentAccumulator(2).finish());
}

TEST_CASE("parameter counts") {
  const ParamCount c = count_params(SequenceModelSpec{});
  CHECK(GruLayer::param_count(106, 300) == 367200);
  CHECK(GruLayer::param_count(300, 300) == 541800);
  CHECK(c.head == 1204);
  CHECK(c.recurrent == 367200 + 2 * 541800);
  CHECK(c.total() == 1452004);
  CHECK(SequenceModel(SequenceModelSpec{}).param_count() == 1452004);

  const Autoencoder ae(128 * 128, 100);
  CHECK(ae.encoder1.param_count() == 1638500);
  CHECK(ae.encoder2.param_count() == 10100);
  CHECK(ae.decoder.param_count() == 1654784);
  CHECK(ae.param_count() == 3303384);

  // Against the generic formula 3n(m+n) + 6n on small sizes.
  for (int m = 1; m < 5; ++m)
    for (int n = 1; n < 5; ++n) {
      GruLayer g(m, n);
      std::size_t total = 0;
      for (auto& b : g.params("g")) total += b.size;
      CHECK(total == static_cast<std::size_t>(3 * n * (m + n) + 6 * n));
    }
}

TEST_CASE("weight archive round-trip") {
  std::mt19937_64 rng(14);
  SequenceModel model(SequenceModelSpec{6, {5, 4}, 3});
  model.init(rng);
  WeightArchive a;
  model.to_archive(a);
  std::ostringstream first;
  a.write(first);
  std::istringstream in(first.str());
  const WeightArchive back = WeightArchive::read(in);
  std::ostringstream second;
  back.write(second);
  CHECK(first.str() == second.str());

  const SequenceModel loaded = SequenceModel::from_archive(back);
  const Matrix x = random_matrix(rng, 4 * 2, 6);
  CHECK(loaded.forward(x, 4, 2) == model.forward(x, 4, 2));

  CHECK_THROWS_AS(Autoencoder::from_archive(back), FormatError);

  std::string wrong_version = first.str();
  wrong_version.replace(wrong_version.find(" 1\n"), 3, " 9\n");
  std::istringstream wv(wrong_version);
  CHECK_THROWS_AS(WeightArchive::read(wv), FormatError);

  std::istringstream truncated(first.str().substr(0, first.str().size() - 5));
  CHECK_THROWS_AS(WeightArchive::read(truncated), FormatError);
}

#include "lattice/nn/gru.hpp"

#include "lattice/error.hpp"

namespace lattice::nn {
namespace {

using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

GruLayer::GruLayer(int input_dim, int hidden_dim) {
  if (input_dim <= 0 || hidden_dim <= 0) throw ContractViolation("GruLayer: dimensions must be > 0");
  const int g = 3 * hidden_dim;
  input_weight = Matrix::Zero(g, input_dim);
  recurrent_weight = Matrix::Zero(g, hidden_dim);
  input_bias = Vector::Zero(g);
  recurrent_bias = Vector::Zero(g);
  grad_input_weight = Matrix::Zero(g, input_dim);
  grad_recurrent_weight = Matrix::Zero(g, hidden_dim);
  grad_input_bias = Vector::Zero(g);
  grad_recurrent_bias = Vector::Zero(g);
}

std::size_t GruLayer::param_count(int input_dim, int hidden_dim) {
  const auto m = static_cast<std::size_t>(input_dim);
  const auto n = static_cast<std::size_t>(hidden_dim);
  return 3 * n * (m + n) + 6 * n;
}

void GruLayer::init(Rng& rng) {
  glorot_uniform(input_weight, rng);
  orthogonal_blocks(recurrent_weight, hidden_dim(), rng);
  input_bias.setZero();
  recurrent_bias.setZero();
}

Matrix GruLayer::forward(const Matrix& x, int steps, int batch, GruCache* cache) const {
  const int n = hidden_dim();
  const Eigen::Index rows = static_cast<Eigen::Index>(steps) * batch;
  if (steps <= 0 || batch <= 0 || x.rows() != rows || x.cols() != input_dim()) {
    throw ContractViolation("GruLayer::forward: expected (" + std::to_string(rows) + " x " +
                            std::to_string(input_dim()) + ") input, got (" +
                            std::to_string(x.rows()) + " x " + std::to_string(x.cols()) + ")");
  }

  Matrix projected = x * input_weight.transpose();
  projected.rowwise() += input_bias.transpose();

  Matrix hidden(rows, n);
  Matrix update, reset, candidate, recurrent;
  if (cache) {
    update.resize(rows, n);
    reset.resize(rows, n);
    candidate.resize(rows, n);
    recurrent.resize(rows, n);
  }

  Matrix h_prev = Matrix::Zero(batch, n);
  Matrix hu(batch, 3 * n);
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * batch;
    hu.noalias() = h_prev * recurrent_weight.transpose();
    hu.rowwise() += recurrent_bias.transpose();
    const auto xp = projected.middleRows(r0, batch);

    const Matrix z = sigmoid(xp.leftCols(n) + hu.leftCols(n));
    const Matrix r = sigmoid(xp.middleCols(n, n) + hu.middleCols(n, n));
    const Matrix c =
        (xp.rightCols(n).array() + r.array() * hu.rightCols(n).array()).tanh().matrix();
    Matrix h = (z.array() * h_prev.array() + (1.0 - z.array()) * c.array()).matrix();

    hidden.middleRows(r0, batch) = h;
    if (cache) {
      update.middleRows(r0, batch) = z;
      reset.middleRows(r0, batch) = r;
      candidate.middleRows(r0, batch) = c;
      recurrent.middleRows(r0, batch) = hu.rightCols(n);
    }
    h_prev = std::move(h);
  }

  if (cache) {
    cache->steps = steps;
    cache->batch = batch;
    cache->input = x;
    cache->hidden = hidden;
    cache->update = std::move(update);
    cache->reset = std::move(reset);
    cache->candidate = std::move(candidate);
    cache->recurrent = std::move(recurrent);
  }
  return hidden;
}

Vector GruLayer::step(const Vector& x, const Vector& h_prev) const {
  if (x.size() != input_dim()) throw ContractViolation("GruLayer::step: bad input size");
  if (h_prev.size() != hidden_dim()) throw ContractViolation("GruLayer::step: bad state size");
  const int n = hidden_dim();
  const Vector xp = input_weight * x + input_bias;
  const Vector hu = recurrent_weight * h_prev + recurrent_bias;
  const Vector z = (1.0 / (1.0 + (-(xp.head(n) + hu.head(n))).array().exp())).matrix();
  const Vector r = (1.0 / (1.0 + (-(xp.segment(n, n) + hu.segment(n, n))).array().exp())).matrix();
  const Vector c = (xp.tail(n).array() + r.array() * hu.tail(n).array()).tanh().matrix();
  return (z.array() * h_prev.array() + (1.0 - z.array()) * c.array()).matrix();
}

Matrix GruLayer::backward(const GruCache& cache, const Matrix& d_hidden) {
  const int n = hidden_dim();
  const int steps = cache.steps;
  const int batch = cache.batch;
  const Eigen::Index rows = static_cast<Eigen::Index>(steps) * batch;
  if (steps <= 0 || cache.hidden.rows() != rows) {
    throw ContractViolation("GruLayer::backward: missing or incomplete forward cache");
  }
  if (d_hidden.rows() != rows || d_hidden.cols() != n) {
    throw ContractViolation("GruLayer::backward: gradient shape does not match cache");
  }

  Matrix g_input(rows, 3 * n);
  Matrix g_recurrent(rows, 3 * n);
  Matrix dh_next = Matrix::Zero(batch, n);
  const Matrix zeros = Matrix::Zero(batch, n);

  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * batch;
    const Matrix dh = d_hidden.middleRows(r0, batch) + dh_next;
    const auto h_prev = t > 0 ? cache.hidden.middleRows(r0 - batch, batch) : zeros.middleRows(0, batch);
    const auto z = cache.update.middleRows(r0, batch).array();
    const auto r = cache.reset.middleRows(r0, batch).array();
    const auto c = cache.candidate.middleRows(r0, batch).array();
    const auto hu = cache.recurrent.middleRows(r0, batch).array();

    const RowArray d_cand_pre = dh.array() * (1.0 - z) * (1.0 - c.square());
    const RowArray d_update_pre = dh.array() * (h_prev.array() - c) * z * (1.0 - z);
    const RowArray d_reset_pre = d_cand_pre * hu * r * (1.0 - r);

    g_input.block(r0, 0, batch, n) = d_update_pre.matrix();
    g_input.block(r0, n, batch, n) = d_reset_pre.matrix();
    g_input.block(r0, 2 * n, batch, n) = d_cand_pre.matrix();
    g_recurrent.block(r0, 0, batch, 2 * n) = g_input.block(r0, 0, batch, 2 * n);
    g_recurrent.block(r0, 2 * n, batch, n) = (d_cand_pre * r).matrix();

    dh_next = (dh.array() * z).matrix();
    dh_next.noalias() += g_recurrent.middleRows(r0, batch) * recurrent_weight;
  }

  grad_input_weight.noalias() += g_input.transpose() * cache.input;
  grad_input_bias += g_input.colwise().sum().transpose();
  if (steps > 1) {
    const Eigen::Index tail = rows - batch;
    grad_recurrent_weight.noalias() +=
        g_recurrent.bottomRows(tail).transpose() * cache.hidden.topRows(tail);
  }
  grad_recurrent_bias += g_recurrent.colwise().sum().transpose();
  return g_input * input_weight;
}

void GruLayer::zero_grad() {
  grad_input_weight.setZero();
  grad_recurrent_weight.setZero();
  grad_input_bias.setZero();
  grad_recurrent_bias.setZero();
}

std::vector<ParamBlock> GruLayer::params(const std::string& prefix) {
  auto block = [](const std::string& name, auto& v, auto& g) {
    return ParamBlock{name, v.data(), g.data(), static_cast<std::size_t>(v.size())};
  };
  return {
      block(prefix + ".W", input_weight, grad_input_weight),
      block(prefix + ".U", recurrent_weight, grad_recurrent_weight),
      block(prefix + ".bx", input_bias, grad_input_bias),
      block(prefix + ".bh", recurrent_bias, grad_recurrent_bias),
  };
}

}  // namespace lattice::nn

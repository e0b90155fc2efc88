#include "drsrl/nn.hpp"

#include <cmath>
#include <string>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using Map = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& z) { return z.array().tanh().matrix(); }

}  // namespace

ApproximatorSpec ApproximatorSpec::task_default() { return {22, 64, {128, 128}, 0, 23}; }

ApproximatorSpec ApproximatorSpec::safety_default() { return {22, 32, {48}, 23, 23}; }

std::size_t ApproximatorSpec::param_count() const { return Approximator(*this).param_count(); }

Approximator::Approximator(ApproximatorSpec spec) : spec_(std::move(spec)) {
  if (spec_.node_width <= 0 || spec_.graph_hidden <= 0 || spec_.n_actions <= 0 || spec_.extra_inputs < 0) {
    throw DimensionError("ApproximatorSpec: layer sizes must be positive");
  }
  std::size_t off = 0;
  const auto nw = static_cast<std::size_t>(spec_.node_width);
  const auto gh = static_cast<std::size_t>(spec_.graph_hidden);
  w_self_ = off;
  off += gh * nw;
  w_nbr_ = off;
  off += gh * nw;
  b_graph_ = off;
  off += gh;
  int in = spec_.graph_hidden + spec_.extra_inputs;
  auto dense = [&off](int i, int o) {
    Dense d;
    d.in = i;
    d.out = o;
    d.w = off;
    off += static_cast<std::size_t>(i) * static_cast<std::size_t>(o);
    d.b = off;
    off += static_cast<std::size_t>(o);
    return d;
  };
  for (int h : spec_.trunk_hidden) {
    if (h <= 0) throw DimensionError("ApproximatorSpec: trunk sizes must be positive");
    trunk_.push_back(dense(in, h));
    in = h;
  }
  policy_head_ = dense(in, spec_.n_actions);
  value_head_ = dense(in, 1);
  count_ = off;
}

void Approximator::check(std::span<const double> params, const NetBatch& batch) const {
  if (params.size() != count_) {
    throw DimensionError("approximator expects " + std::to_string(count_) + " parameters, got " +
                         std::to_string(params.size()));
  }
  if (batch.self.rows() != spec_.node_width || batch.mean.rows() != spec_.node_width ||
      batch.mean.cols() != batch.self.cols()) {
    throw DimensionError("approximator: node features must be " + std::to_string(spec_.node_width) + " wide");
  }
  if (batch.extra.rows() != spec_.extra_inputs || (spec_.extra_inputs > 0 && batch.extra.cols() != batch.self.cols())) {
    throw DimensionError("approximator: expected " + std::to_string(spec_.extra_inputs) + " extra inputs");
  }
}

NetOutput Approximator::forward(std::span<const double> params, const NetBatch& batch) const {
  check(params, batch);
  const double* p = params.data();
  const int nw = spec_.node_width;
  const int gh = spec_.graph_hidden;
  NetOutput out;
  const ConstMap ws(p + w_self_, gh, nw);
  const ConstMap wn(p + w_nbr_, gh, nw);
  const ConstVecMap bg(p + b_graph_, gh);
  Eigen::MatrixXd z = ws * batch.self + wn * batch.mean;
  z.colwise() += bg;
  out.hidden.push_back(tanh_of(z));

  Eigen::MatrixXd u;
  if (spec_.extra_inputs > 0) {
    u.resize(gh + spec_.extra_inputs, batch.size());
    u << out.hidden.back(), batch.extra;
  } else {
    u = out.hidden.back();
  }
  for (const auto& layer : trunk_) {
    const ConstMap w(p + layer.w, layer.out, layer.in);
    const ConstVecMap b(p + layer.b, layer.out);
    Eigen::MatrixXd zl = w * u;
    zl.colwise() += b;
    out.hidden.push_back(tanh_of(zl));
    u = out.hidden.back();
  }
  const ConstMap wp(p + policy_head_.w, policy_head_.out, policy_head_.in);
  const ConstVecMap bp(p + policy_head_.b, policy_head_.out);
  out.logits = wp * u;
  out.logits.colwise() += bp;
  const ConstMap wv(p + value_head_.w, 1, value_head_.in);
  out.value = (wv * u).row(0);
  out.value.array() += p[value_head_.b];
  return out;
}

void Approximator::backward(std::span<const double> params, const NetBatch& batch, const NetOutput& out,
                            const Eigen::MatrixXd& dlogits, const Eigen::RowVectorXd& dvalue,
                            std::span<double> grad) const {
  check(params, batch);
  if (grad.size() != count_) throw DimensionError("approximator: gradient buffer has the wrong size");
  const double* p = params.data();
  double* g = grad.data();
  const int nw = spec_.node_width;
  const int gh = spec_.graph_hidden;
  const Eigen::Index n = batch.size();

  // Input to the first dense layer after the graph layer.
  Eigen::MatrixXd graph_out;
  if (spec_.extra_inputs > 0) {
    graph_out.resize(gh + spec_.extra_inputs, n);
    graph_out << out.hidden.front(), batch.extra;
  } else {
    graph_out = out.hidden.front();
  }
  const Eigen::MatrixXd& last = trunk_.empty() ? graph_out : out.hidden.back();

  const ConstMap wp(p + policy_head_.w, policy_head_.out, policy_head_.in);
  const ConstMap wv(p + value_head_.w, 1, value_head_.in);
  Map(g + policy_head_.w, policy_head_.out, policy_head_.in) += dlogits * last.transpose();
  VecMap(g + policy_head_.b, policy_head_.out) += dlogits.rowwise().sum();
  Map(g + value_head_.w, 1, value_head_.in) += dvalue * last.transpose();
  g[value_head_.b] += dvalue.sum();
  Eigen::MatrixXd du = wp.transpose() * dlogits + wv.transpose() * dvalue;

  for (std::size_t l = trunk_.size(); l-- > 0;) {
    const auto& layer = trunk_[l];
    const Eigen::MatrixXd& act = out.hidden[l + 1];
    const Eigen::MatrixXd& prev = l == 0 ? graph_out : out.hidden[l];
    const Eigen::MatrixXd dz = (du.array() * (1.0 - act.array().square())).matrix();
    Map(g + layer.w, layer.out, layer.in) += dz * prev.transpose();
    VecMap(g + layer.b, layer.out) += dz.rowwise().sum();
    const ConstMap w(p + layer.w, layer.out, layer.in);
    du = w.transpose() * dz;
  }

  const Eigen::MatrixXd& h0 = out.hidden.front();
  const Eigen::MatrixXd dz0 = (du.topRows(gh).array() * (1.0 - h0.array().square())).matrix();
  Map(g + w_self_, gh, nw) += dz0 * batch.self.transpose();
  Map(g + w_nbr_, gh, nw) += dz0 * batch.mean.transpose();
  VecMap(g + b_graph_, gh) += dz0.rowwise().sum();
}

std::vector<double> Approximator::initialize(Rng& rng) const {
  std::vector<double> params(count_, 0.0);
  auto fill = [&](std::size_t off, int rows, int cols, int fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + rows));
    for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); ++i) {
      params[off + i] = rng.uniform(-limit, limit);
    }
  };
  const int nw = spec_.node_width;
  const int gh = spec_.graph_hidden;
  fill(w_self_, gh, nw, 2 * nw);
  fill(w_nbr_, gh, nw, 2 * nw);
  for (const auto& layer : trunk_) fill(layer.w, layer.out, layer.in, layer.in);
  fill(policy_head_.w, policy_head_.out, policy_head_.in, policy_head_.in);
  fill(value_head_.w, 1, value_head_.in, value_head_.in);
  // Small policy head: near-uniform initial policy.
  for (std::size_t i = 0; i < static_cast<std::size_t>(policy_head_.out * policy_head_.in); ++i) {
    params[policy_head_.w + i] *= 0.01;
  }
  return params;
}

double ParamSet::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

void project_in_place(ParamSet& params) {
  const double n = params.norm();
  if (n > params.norm_cap && n > 0.0) {
    const double scale = params.norm_cap / n;
    for (double& v : params.values) v *= scale;
  }
}

ParamSet project(ParamSet params) {
  project_in_place(params);
  return params;
}

Adam::Adam(std::size_t n, double lr, double max_grad_norm)
    : lr_(lr), max_grad_norm_(max_grad_norm), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw DimensionError("Adam: size mismatch");
  double gn = 0.0;
  for (double g : grad) gn += g * g;
  gn = std::sqrt(gn);
  if (!std::isfinite(gn)) throw NumericalError("Adam: non-finite gradient");
  const double clip = (max_grad_norm_ > 0.0 && gn > max_grad_norm_) ? max_grad_norm_ / gn : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] * clip;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace drsrl

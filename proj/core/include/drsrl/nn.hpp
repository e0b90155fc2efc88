#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "drsrl/random.hpp"

namespace drsrl {

/// Layer sizes of one graph-encoder + MLP approximator with a policy head
/// (n_actions logits) and a scalar value head.
///
/// The graph layer is a single mean-aggregation layer with separate weights
/// for the ego row and for the mean over its neighbourhood (self-loop
/// included): h = tanh(W_self x_ego + W_nbr mean_j x_j + b). Extra inputs
/// (the task logits, for the safety model) are concatenated after it.
struct ApproximatorSpec {
  int node_width = 22;
  int graph_hidden = 64;
  std::vector<int> trunk_hidden{128, 128};
  int extra_inputs = 0;
  int n_actions = 23;

  static ApproximatorSpec task_default();
  static ApproximatorSpec safety_default();

  std::size_t param_count() const;
  bool operator==(const ApproximatorSpec&) const = default;
};

/// Inputs for a batch of samples; one column per sample.
struct NetBatch {
  Eigen::MatrixXd self;   // node_width x B
  Eigen::MatrixXd mean;   // node_width x B
  Eigen::MatrixXd extra;  // extra_inputs x B (0 rows when unused)

  Eigen::Index size() const { return self.cols(); }
};

struct NetOutput {
  Eigen::MatrixXd logits;     // n_actions x B
  Eigen::RowVectorXd value;   // 1 x B
  std::vector<Eigen::MatrixXd> hidden;  // activations: graph layer, then each trunk layer
};

class Approximator {
 public:
  explicit Approximator(ApproximatorSpec spec);

  const ApproximatorSpec& spec() const { return spec_; }
  std::size_t param_count() const { return count_; }

  NetOutput forward(std::span<const double> params, const NetBatch& batch) const;

  /// Accumulates d(loss)/d(params) into `grad` given the cotangents of the
  /// logits and values produced by `forward` on the same batch.
  void backward(std::span<const double> params, const NetBatch& batch, const NetOutput& out,
                const Eigen::MatrixXd& dlogits, const Eigen::RowVectorXd& dvalue, std::span<double> grad) const;

  /// Xavier-uniform weights, zero biases.
  std::vector<double> initialize(Rng& rng) const;

 private:
  struct Dense {
    std::size_t w = 0;  // offset of the out x in weight matrix (column-major)
    std::size_t b = 0;  // offset of the bias
    int in = 0;
    int out = 0;
  };

  void check(std::span<const double> params, const NetBatch& batch) const;

  ApproximatorSpec spec_;
  std::size_t w_self_ = 0;
  std::size_t w_nbr_ = 0;
  std::size_t b_graph_ = 0;
  std::vector<Dense> trunk_;
  Dense policy_head_;
  Dense value_head_;
  std::size_t count_ = 0;
};

/// Flat parameter vector with an L2 norm cap.
struct ParamSet {
  std::vector<double> values;
  double norm_cap = 0.0;

  double norm() const;
};

/// Euclidean projection onto the ball of radius norm_cap.
ParamSet project(ParamSet params);
void project_in_place(ParamSet& params);

/// Adam with global-norm gradient clipping.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double max_grad_norm = 0.5);

  void step(std::span<double> params, std::span<const double> grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 3e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  double max_grad_norm_ = 0.5;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace drsrl

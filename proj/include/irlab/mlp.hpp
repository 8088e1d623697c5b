#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irlab/rng.hpp"

namespace irlab {

enum class Activation { ReLU, Tanh };
enum class ForwardMode { Train, Eval };

/// Weights of a hidden stack plus one or two linear output heads. Also reused
/// as the gradient container (same shapes).
struct MlpParams {
  std::vector<Eigen::MatrixXd> w;       // w[l] is (width[l+1] x width[l])
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> head_w;  // head_w[h] is (head_dim[h] x last width)
  std::vector<Eigen::VectorXd> head_b;

  MlpParams zeros_like() const;
  bool all_finite() const;
  double max_abs() const;
  void axpy(double alpha, const MlpParams& other);  // this += alpha * other
  /// Flat read/write access in a fixed block order, for checks and optimizers.
  std::size_t flat_size() const;
  double* flat_entry(std::size_t index);
  std::string block_name(std::size_t index) const;
};

/// Feed-forward net with ReLU (or tanh) hidden layers, inverted dropout on
/// hidden activations and linear heads. Rows of a batch are samples.
class Mlp {
 public:
  /// widths = {input, hidden...}; head_dims = one or two head widths.
  /// Parameters start uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  Mlp(std::vector<int> widths, std::vector<int> head_dims, Activation act,
      double dropout_rate, std::uint64_t init_seed);

  struct Cache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> hidden;  // post-activation, post-dropout
    std::vector<Eigen::MatrixXd> pre;     // pre-activation
    std::vector<Eigen::MatrixXd> mask;    // dropout scale per unit (train mode)
    bool train = false;
  };

  /// Train mode applies inverted dropout (surviving units scaled by
  /// 1/(1-rate)) using `rng`; eval mode is deterministic. The cache, when
  /// given, records what backward needs.
  std::vector<Eigen::MatrixXd> forward(const Eigen::MatrixXd& input, ForwardMode mode,
                                       Rng* rng = nullptr, Cache* cache = nullptr) const;

  /// Gradients of a scalar loss given d(loss)/d(head outputs). Honors the
  /// dropout masks recorded in the cache. `input_grad`, when non-null,
  /// receives d(loss)/d(input).
  MlpParams backward(const Cache& cache, const std::vector<Eigen::MatrixXd>& head_grads,
                     Eigen::MatrixXd* input_grad = nullptr) const;

  MlpParams& params() { return params_; }
  const MlpParams& params() const { return params_; }
  const std::vector<int>& widths() const { return widths_; }
  const std::vector<int>& head_dims() const { return head_dims_; }
  int input_dim() const { return widths_.front(); }
  Activation activation() const { return act_; }
  double dropout_rate() const { return dropout_; }

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  std::vector<int> widths_;
  std::vector<int> head_dims_;
  Activation act_ = Activation::ReLU;
  double dropout_ = 0.0;
  MlpParams params_;
};

void mlp_save(const Mlp& net, const std::string& path);
Mlp mlp_load(const std::string& path);

}  // namespace irlab

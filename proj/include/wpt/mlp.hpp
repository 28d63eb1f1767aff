#ifndef WPT_MLP_HPP_
#define WPT_MLP_HPP_

#include <Eigen/Dense>
#include <vector>

#include "wpt/scenario.hpp"

namespace wpt {

/// Fully connected network with tanh hidden layers and a linear output layer.
/// Batches are column-major: one sample per column.
///
/// Flat parameter order, layer by layer: weight matrix (out x in, column-major)
/// then bias vector.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // input, hidden outputs, network output
  };

  Mlp() = default;
  // Weights ~ N(0, 1/fan_in); the output layer is scaled by output_scale. Biases start at zero.
  Mlp(int inputs, const std::vector<int>& hidden, int outputs, RandomStream& rng, double output_scale = 1.0);
  // All parameters zero. `layer_sizes` includes input and output widths.
  explicit Mlp(std::vector<int> layer_sizes);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int parameter_count() const;

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  Eigen::VectorXd forward_one(const Eigen::VectorXd& x) const;

  // Gradient of sum over the batch of <grad_out, output> with respect to the parameters.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out) const;

  // Directional derivative of every output in the batch along parameter direction v.
  Eigen::MatrixXd jvp(const Cache& cache, const Eigen::VectorXd& v) const;

  bool all_finite() const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Adam on a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(int size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  // Returns the parameter increment for gradient `grad` (of a loss to minimize).
  Eigen::VectorXd step(const Eigen::VectorXd& grad);

  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  long long steps() const { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  Eigen::VectorXd m_, v_;
  long long t_ = 0;
};

}  // namespace wpt

#endif  // WPT_MLP_HPP_

#include "wpt/mlp.hpp"

#include <cmath>
#include <random>

#include "wpt/errors.hpp"

namespace wpt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mlp::Mlp(int inputs, const std::vector<int>& hidden, int outputs, RandomStream& rng, double output_scale) {
  sizes_.push_back(inputs);
  sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
  sizes_.push_back(outputs);
  for (std::size_t k = 1; k < sizes_.size(); ++k) {
    const int fan_in = sizes_[k - 1];
    double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (k + 1 == sizes_.size()) sd *= output_scale;
    std::normal_distribution<double> normal(0.0, sd);
    MatrixXd w(sizes_[k], fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = normal(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(VectorXd::Zero(sizes_[k]));
  }
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ValidationError("mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw ValidationError("mlp: layer sizes must be positive");
  }
  for (std::size_t k = 1; k < sizes_.size(); ++k) {
    weights_.push_back(MatrixXd::Zero(sizes_[k], sizes_[k - 1]));
    biases_.push_back(VectorXd::Zero(sizes_[k]));
  }
}

int Mlp::parameter_count() const {
  int count = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) count += static_cast<int>(weights_[k].size() + biases_[k].size());
  return count;
}

VectorXd Mlp::parameters() const {
  VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    flat.segment(at, weights_[k].size()) = weights_[k].reshaped();
    at += weights_[k].size();
    flat.segment(at, biases_[k].size()) = biases_[k];
    at += biases_[k].size();
  }
  return flat;
}

void Mlp::set_parameters(const VectorXd& flat) {
  if (flat.size() != parameter_count()) throw ValidationError("mlp: parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    weights_[k].reshaped() = flat.segment(at, weights_[k].size());
    at += weights_[k].size();
    biases_[k] = flat.segment(at, biases_[k].size());
    at += biases_[k].size();
  }
}

MatrixXd Mlp::forward(const MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_size()) throw ValidationError("mlp: input has the wrong size");
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  MatrixXd a = x;
  const std::size_t layers = weights_.size();
  for (std::size_t k = 0; k < layers; ++k) {
    MatrixXd z = weights_[k] * a;
    z.colwise() += biases_[k];
    a = (k + 1 < layers) ? MatrixXd(z.array().tanh()) : z;
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

VectorXd Mlp::forward_one(const VectorXd& x) const { return forward(MatrixXd(x)).col(0); }

VectorXd Mlp::backward(const Cache& cache, const MatrixXd& grad_out) const {
  const std::size_t layers = weights_.size();
  std::vector<MatrixXd> gw(layers);
  std::vector<VectorXd> gb(layers);
  MatrixXd delta = grad_out;
  for (std::size_t k = layers; k-- > 0;) {
    const MatrixXd& in = cache.activations[k];
    gw[k] = delta * in.transpose();
    gb[k] = delta.rowwise().sum();
    if (k > 0) delta = (weights_[k].transpose() * delta).cwiseProduct(MatrixXd(1.0 - in.array().square()));
  }
  VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < layers; ++k) {
    flat.segment(at, gw[k].size()) = gw[k].reshaped();
    at += gw[k].size();
    flat.segment(at, gb[k].size()) = gb[k];
    at += gb[k].size();
  }
  return flat;
}

MatrixXd Mlp::jvp(const Cache& cache, const VectorXd& v) const {
  if (v.size() != parameter_count()) throw ValidationError("mlp: tangent has the wrong length");
  const std::size_t layers = weights_.size();
  const auto batch = cache.activations.front().cols();
  MatrixXd tangent = MatrixXd::Zero(input_size(), batch);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < layers; ++k) {
    const auto rows = weights_[k].rows(), cols = weights_[k].cols();
    const MatrixXd dw = v.segment(at, rows * cols).reshaped(rows, cols);
    at += rows * cols;
    const VectorXd db = v.segment(at, rows);
    at += rows;
    MatrixXd dz = dw * cache.activations[k] + weights_[k] * tangent;
    dz.colwise() += db;
    if (k + 1 < layers) {
      tangent = dz.cwiseProduct(MatrixXd(1.0 - cache.activations[k + 1].array().square()));
    } else {
      tangent = dz;
    }
  }
  return tangent;
}

bool Mlp::all_finite() const {
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!weights_[k].allFinite() || !biases_[k].allFinite()) return false;
  }
  return true;
}

Adam::Adam(int size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(VectorXd::Zero(size)),
      v_(VectorXd::Zero(size)) {}

VectorXd Adam::step(const VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  return -lr_ * (m_ / c1).cwiseQuotient(((v_ / c2).cwiseSqrt().array() + eps_).matrix());
}

}  // namespace wpt

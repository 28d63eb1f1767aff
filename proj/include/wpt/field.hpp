#ifndef WPT_FIELD_HPP_
#define WPT_FIELD_HPP_

#include <Eigen/Dense>
#include <vector>

#include "wpt/scenario.hpp"

namespace wpt {

// Second-order statistics of the field at one phase of the covariance period:
// K = U diag(eigenvalues) U^H.
struct PhaseFactors {
  Eigen::MatrixXcd basis;         // U, n_s x s, orthonormal columns
  Eigen::VectorXd eigenvalues;    // s positive entries
  Eigen::VectorXd node_variance;  // diag(K), one entry per node

  Eigen::MatrixXcd covariance() const;
};

PhaseFactors make_phase(Eigen::MatrixXcd basis, Eigen::VectorXd eigenvalues);

class FieldStatistics {
 public:
  explicit FieldStatistics(std::vector<PhaseFactors> phases);

  int period() const { return static_cast<int>(phases_.size()); }
  int n() const { return static_cast<int>(phases_.front().basis.rows()); }
  int rank() const { return static_cast<int>(phases_.front().basis.cols()); }

  // Phase (t mod period). Slots are 1-based.
  const PhaseFactors& at(int t) const;
  const PhaseFactors& phase(int m) const { return phases_.at(m); }

 private:
  std::vector<PhaseFactors> phases_;
};

// Haar-distributed n x n unitary: QR of a complex Ginibre matrix with the
// phases of diag(R) absorbed into Q.
Eigen::MatrixXcd haar_unitary(int n, RandomStream& rng);

// Eigenvalues base^(m k), k = 0..n-1, rescaled to trace n.
Eigen::VectorXd phase_eigenvalues(int n, double base, int phase);

FieldStatistics build_field(const ScenarioConfig& config, RandomStream& rng);
// Same, drawing from rng_stream(config, "haar", 0).
FieldStatistics build_field(const ScenarioConfig& config);

inline const PhaseFactors& covariance_at(const FieldStatistics& stats, int t) { return stats.at(t); }

}  // namespace wpt

#endif  // WPT_FIELD_HPP_

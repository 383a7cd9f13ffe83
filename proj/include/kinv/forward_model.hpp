#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kinv/errors.hpp"

namespace kinv {

enum class FidelityLevel { High, Reduced };

/// How a batch of sigma points (or particles) is assigned to fidelities.
/// MeanHighOthersReduced evaluates index 0 (the mean point) on the high-fidelity
/// model and everything else on the reduced one.
enum class EvaluationPolicy { AllHigh, MeanHighOthersReduced };

/// Parameter-to-data map. Implementations must be deterministic in
/// (theta, fidelity) and produce finite output of fixed dimension.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::Index parameter_dim() const = 0;
  virtual Eigen::Index observation_dim() const = 0;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& theta,
                           FidelityLevel fidelity) const {
    if (theta.size() != parameter_dim()) {
      throw DimensionError("ForwardModel: parameter has dimension " +
                           std::to_string(theta.size()) + ", expected " +
                           std::to_string(parameter_dim()));
    }
    return fidelity == FidelityLevel::High ? evaluate_high(theta)
                                           : evaluate_reduced(theta);
  }

  /// Models that are not safe for concurrent evaluation return false and the
  /// batch evaluator runs them serially.
  virtual bool thread_safe() const { return true; }

 protected:
  virtual Eigen::VectorXd evaluate_high(const Eigen::VectorXd& theta) const = 0;
  /// Models without a reduced variant treat Reduced as High.
  virtual Eigen::VectorXd evaluate_reduced(const Eigen::VectorXd& theta) const {
    return evaluate_high(theta);
  }
};

struct BatchResult {
  std::vector<Eigen::VectorXd> outputs;  // aligned to input point order
  long high_count = 0;
  long reduced_count = 0;
};

/// Evaluates all points under the given policy. Results are assembled in input
/// order, so serial and concurrent execution produce identical output. A
/// failure at point j aborts the batch with BatchError carrying j.
BatchResult evaluate_batch(const ForwardModel& model,
                           const std::vector<Eigen::VectorXd>& points,
                           EvaluationPolicy policy, int threads = 1);

}  // namespace kinv

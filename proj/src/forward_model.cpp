#include "kinv/forward_model.hpp"

#include <atomic>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

namespace kinv {

namespace {

FidelityLevel fidelity_for(EvaluationPolicy policy, std::size_t index) {
  if (policy == EvaluationPolicy::AllHigh) return FidelityLevel::High;
  return index == 0 ? FidelityLevel::High : FidelityLevel::Reduced;
}

}  // namespace

BatchResult evaluate_batch(const ForwardModel& model,
                           const std::vector<Eigen::VectorXd>& points,
                           EvaluationPolicy policy, int threads) {
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j].size() != model.parameter_dim()) {
      throw DimensionError("evaluate_batch: point " + std::to_string(j) +
                           " has dimension " + std::to_string(points[j].size()) +
                           ", expected " + std::to_string(model.parameter_dim()));
    }
  }

  BatchResult result;
  result.outputs.resize(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (fidelity_for(policy, j) == FidelityLevel::High) {
      ++result.high_count;
    } else {
      ++result.reduced_count;
    }
  }

  const bool serial = threads <= 1 || points.size() <= 1 || !model.thread_safe();
  if (serial) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      try {
        result.outputs[j] = model.evaluate(points[j], fidelity_for(policy, j));
      } catch (const std::exception& e) {
        throw BatchError(j, e.what());
      }
    }
    return result;
  }

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), points.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex error_mutex;
  std::size_t first_error = std::numeric_limits<std::size_t>::max();
  std::string error_message;

  auto worker = [&]() {
    for (;;) {
      const std::size_t j = cursor.fetch_add(1);
      if (j >= points.size()) return;
      try {
        result.outputs[j] = model.evaluate(points[j], fidelity_for(policy, j));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (j < first_error) {
          first_error = j;
          error_message = e.what();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (first_error != std::numeric_limits<std::size_t>::max()) {
    throw BatchError(first_error, error_message);
  }
  return result;
}

}  // namespace kinv

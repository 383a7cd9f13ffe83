#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace kinv {

/// Deterministic random stream (splitmix64 core, Box-Muller normals).
/// Independent substreams are derived from (seed, stream_id), so per-particle
/// draws do not depend on evaluation order or thread scheduling, and sequences
/// are identical across platforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Uniform draw in [0, 1).
  double uniform();
  /// Standard normal draw.
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);

  /// Mixes (tag, a, b) into a substream id.
  static std::uint64_t substream(std::uint64_t tag, std::uint64_t a,
                                 std::uint64_t b);

 private:
  std::uint64_t next_u64();

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kinv

#include "kinv/rng.hpp"

#include <cmath>

namespace kinv {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s ^= stream_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL;
  const std::uint64_t b = splitmix64(s);
  state_ = a ^ (b + 0x2545F4914F6CDD1DULL);
  if (state_ == 0) state_ = 0x853C49E6748FEA9BULL;
}

std::uint64_t RandomStream::substream(std::uint64_t tag, std::uint64_t a,
                                      std::uint64_t b) {
  std::uint64_t s = tag + a * 0xA0761D6478BD642FULL;
  const std::uint64_t h = splitmix64(s);
  s = h + b * 0xE7037ED1A0B428DBULL;
  return splitmix64(s);
}

std::uint64_t RandomStream::next_u64() {
  return splitmix64(state_);
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on uniforms; u1 bounded away from zero.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Eigen::VectorXd RandomStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

}  // namespace kinv

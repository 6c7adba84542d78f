#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace flowvmc {

/**
 * Counter-based pseudorandom stream.
 *
 * Every draw is a hash of (key, counter), so a stream is fully determined by
 * its seed and the number of draws taken: identical seeds give identical
 * sequences on any platform, and independent sub-streams can be split off a
 * parent without sharing state. Box-Muller is used for normals so the draw
 * count per normal is fixed.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in (0, 1]; safe as a log argument.
  double uniform_open();

  /// Standard normal draw (Box-Muller, two uniforms per call).
  double normal();

  Eigen::VectorXd normal_vector(int d);

  /// Derived stream, decorrelated from the parent and from other ids.
  RngStream substream(std::uint64_t id) const;

 private:
  struct raw_key_tag {};
  RngStream(raw_key_tag, std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t key, std::uint64_t ctr);

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace flowvmc

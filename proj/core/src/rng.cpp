#include "flowvmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace flowvmc {

namespace {
constexpr std::uint64_t kSeedTag = 0x5eedc0de5eedc0deULL;
constexpr std::uint64_t kSubstreamTag = 0x9d2c5680ca876a5bULL;
}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix(kSeedTag, seed)) {}

// SplitMix64 finalizer over a key/counter combination. The finalizer is a
// bijective scramble of the 64-bit state, which is what makes equal-seed
// streams identical and distinct-key streams uncorrelated in practice.
std::uint64_t RngStream::mix(std::uint64_t key, std::uint64_t ctr) {
  std::uint64_t z = key + 0x9e3779b97f4a7c15ULL * (ctr + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() { return mix(key_, counter_++); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RngStream::normal_vector(int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = normal();
  return v;
}

RngStream RngStream::substream(std::uint64_t id) const {
  return RngStream(raw_key_tag{}, mix(key_ ^ kSubstreamTag, id));
}

}  // namespace flowvmc

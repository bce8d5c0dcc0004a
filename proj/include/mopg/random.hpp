#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mopg::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// splitmix64 step (Steele/Lea/Flood).  Advances `state` and returns the
// next output.  Used everywhere instead of <random> engines so that runs
// are bit-reproducible across platforms and standard libraries.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGamma);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent child seed from a master seed and a list of
// integer salts (problem index, algorithm index, run index, ...).
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> salts) {
  std::uint64_t s = seed;
  for (std::uint64_t v : salts) {
    s ^= v + kGamma;
    s = splitmix64(s);
  }
  return s;
}

// Small deterministic random stream: uniforms via the 53-bit mantissa
// trick, normals via Box-Muller with a cached spare.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> uniform_vector(Eigen::Index n,
                                                          double lo, double hi) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(uniform(lo, hi));
    return v;
  }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> uniform_vector(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lo,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& hi) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      v[i] = static_cast<Scalar>(
          uniform(static_cast<double>(lo[i]), static_cast<double>(hi[i])));
    return v;
  }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> normal_vector(Eigen::Index n) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(normal());
    return v;
  }

  // Uniform direction on the unit sphere.
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> unit_vector(Eigen::Index n) {
    auto v = normal_vector<Scalar>(n);
    const Scalar nrm = v.norm();
    if (nrm > Scalar(0)) v /= nrm;
    else v.setUnit(n, 0);
    return v;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mopg::rng

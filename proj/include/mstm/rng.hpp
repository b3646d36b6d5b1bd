#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace mstm {

// SplitMix64-style mixing; used to derive independent stream seeds from a
// base seed plus stream ids (chain index, replicate index, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t substream = 0);

// A seeded draw stream. One instance per chain / replicate; draws are
// consumed in a fixed order so runs are reproducible for a given seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // U(0,1)
  double normal();   // N(0,1)
  // Gamma(shape, scale) with density x^{shape-1} e^{-x/scale}.
  double gamma(double shape, double scale);
  // InverseGamma(shape, scale) with density x^{-shape-1} e^{-scale/x}.
  double inv_gamma(double shape, double scale);
  // Uniform integer in [0, n).
  int uniform_int(int n);

  Eigen::VectorXd normal_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mstm

#include "mstm/rng.hpp"

#include "mstm/errors.hpp"

namespace mstm {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t substream) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ substream);
}

double RngStream::uniform() {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

double RngStream::normal() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

double RngStream::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0)
    throw MstmError("gamma draw requires positive shape and scale");
  std::gamma_distribution<double> d(shape, scale);
  return d(engine_);
}

double RngStream::inv_gamma(double shape, double scale) {
  // 1/X with X ~ Gamma(shape, rate = scale).
  double g = gamma(shape, 1.0 / scale);
  return 1.0 / g;
}

int RngStream::uniform_int(int n) {
  std::uniform_int_distribution<int> d(0, n - 1);
  return d(engine_);
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
  return z;
}

}  // namespace mstm

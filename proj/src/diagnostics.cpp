#include "mstm/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mstm/errors.hpp"

namespace mstm {

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw MstmError("quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double h = q * (n - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double f = h - std::floor(h);
  return x[lo] * (1.0 - f) + x[hi] * f;
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double mprd(const std::vector<double>& pred, const std::vector<double>& truth,
            int* n_excluded) {
  if (pred.size() != truth.size())
    throw MstmError("mprd: prediction/truth length mismatch");
  std::vector<double> prd;
  prd.reserve(pred.size());
  int excluded = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 0.0) {
      ++excluded;
      continue;
    }
    prd.push_back(std::abs((pred[i] - truth[i]) / truth[i]) * 100.0);
  }
  if (n_excluded) *n_excluded = excluded;
  if (prd.empty()) throw MstmError("mprd: no cells with nonzero truth");
  return median(std::move(prd));
}

double stspe(const std::vector<double>& pred, const std::vector<double>& truth,
             double sigma_eps2) {
  if (pred.size() != truth.size())
    throw MstmError("stspe: prediction/truth length mismatch");
  if (pred.empty()) throw MstmError("stspe: no cells");
  if (sigma_eps2 <= 0.0) throw MstmError("stspe: sigma_eps2 must be > 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return sum / (static_cast<double>(pred.size()) * sigma_eps2);
}

GelmanRubin gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw MstmError("gelman_rubin: need at least 2 chains");
  const std::size_t n = chains[0].size();
  if (n < 10) throw MstmError("gelman_rubin: chains must have length >= 10");
  for (const auto& c : chains)
    if (c.size() != n) throw MstmError("gelman_rubin: chains of unequal length");

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mu = 0.0;
    for (double x : chains[j]) mu += x;
    mu /= static_cast<double>(n);
    double s2 = 0.0;
    for (double x : chains[j]) s2 += (x - mu) * (x - mu);
    s2 /= static_cast<double>(n - 1);
    means[j] = mu;
    vars[j] = s2;
  }
  double W = 0.0;
  for (double v : vars) W += v;
  W /= static_cast<double>(m);

  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= static_cast<double>(m);
  double B_over_n = 0.0;
  for (double mu : means) B_over_n += (mu - grand) * (mu - grand);
  B_over_n /= static_cast<double>(m - 1);

  GelmanRubin out;
  if (W <= 0.0) {
    out.degenerate = true;
    out.rhat = 1.0;
    return out;
  }
  const double nn = static_cast<double>(n);
  const double var_plus = (nn - 1.0) / nn * W + B_over_n;
  // values below 1 are sampling noise; report 1 so identical chains read as 1
  out.rhat = std::max(1.0, std::sqrt(var_plus / W));
  return out;
}

double batch_means_se(const std::vector<double>& series, int batch_size) {
  if (batch_size < 1) throw MstmError("batch_means_se: batch_size must be >= 1");
  const std::size_t n = series.size();
  const std::size_t b = static_cast<std::size_t>(batch_size);
  if (n < 2 * b)
    throw MstmError("batch_means_se: series shorter than two batches");
  const std::size_t m = n / b;

  std::vector<double> batch(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < b; ++i) batch[k] += series[k * b + i];
    batch[k] /= static_cast<double>(b);
  }
  double mu = 0.0;
  for (double x : batch) mu += x;
  mu /= static_cast<double>(m);
  double s2 = 0.0;
  for (double x : batch) s2 += (x - mu) * (x - mu);
  s2 /= static_cast<double>(m - 1);
  return std::sqrt(s2 / static_cast<double>(m));
}

}  // namespace mstm

#pragma once

#include <vector>

namespace mstm {

// Median percent relative difference, median over cells of
// |(pred - truth)/truth| * 100. Cells with truth == 0 are excluded;
// n_excluded (optional) receives their count.
double mprd(const std::vector<double>& pred, const std::vector<double>& truth,
            int* n_excluded = nullptr);

// Standardized squared prediction error: mean((pred - truth)^2) / sigma_eps2.
double stspe(const std::vector<double>& pred, const std::vector<double>& truth,
             double sigma_eps2);

// Potential scale reduction from between/within chain variances.
struct GelmanRubin {
  double rhat = 1.0;
  bool degenerate = false;  // zero within-chain variance
};
GelmanRubin gelman_rubin(const std::vector<std::vector<double>>& chains);

// Monte Carlo standard error of the series mean from batch means
// (default batch size 50). Requires length >= 2 * batch_size.
double batch_means_se(const std::vector<double>& series, int batch_size = 50);

// Type-7 (linear interpolation) quantile of a copy of x.
double quantile(std::vector<double> x, double q);
double median(std::vector<double> x);

}  // namespace mstm

#pragma once

#include <json.hpp>
#include <string>

#include "mstm/config.hpp"
#include "mstm/model.hpp"

namespace mstm {

// Fit artifacts on disk:
//   <dir>/run_metadata.json
//   <dir>/diagnostics.json
//   <dir>/chain_<k>/{eta,xi,beta,variances}.csv
// Numeric CSV cells use full-precision decimal serialization, so identical
// (config, seed) runs produce byte-identical files.

inline constexpr int kFitFormatVersion = 1;

void write_fit_artifacts(const std::string& dir, const RunConfig& config,
                         const Model& model, const FitResult& fit);

// Scalar convergence summaries for every scalar parameter block:
// Gelman-Rubin across chains (needs >= 2), batch-means standard error per
// chain, pooled posterior mean/sd.
nlohmann::json diagnostics_json(const FitResult& fit);

// Reconstructs the model and draws from a fit directory (re-reads the input
// files recorded in run_metadata.json). Rejects other format versions.
struct LoadedFit {
  RunConfig config;
  Model model;
  FitResult fit;
  nlohmann::json metadata;
};
LoadedFit load_fit_dir(const std::string& dir);

std::string basis_dump_csv(const Model& model);

}  // namespace mstm

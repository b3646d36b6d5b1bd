#include "mstm/graph.hpp"

#include <algorithm>
#include <sstream>

#include "mstm/errors.hpp"
#include "mstm/io.hpp"

namespace mstm {

namespace {
constexpr long long kEdgeKeyStride = 1LL << 31;

long long edge_key(int i, int j) { return i * kEdgeKeyStride + j; }
}  // namespace

int AdjacencyGraph::intern(const std::string& id) {
  auto it = index_.find(id);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(units_.size());
  units_.push_back({id, idx});
  index_.emplace(id, idx);
  return idx;
}

int AdjacencyGraph::add_edge(const std::string& a, const std::string& b) {
  int i = intern(a);
  int j = intern(b);
  if (i > j) std::swap(i, j);
  if (edge_lookup_.count(edge_key(i, j))) return 0;
  edge_lookup_.emplace(edge_key(i, j), true);
  edges_.emplace_back(i, j);
  return 1;
}

AdjacencyGraph AdjacencyGraph::from_edge_list(std::istream& in) {
  AdjacencyGraph g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;  // blank or comment-only line
    if (!(ls >> b) || (ls >> extra))
      throw ConfigError("edge list line " + std::to_string(lineno) +
                        ": expected exactly two unit ids");
    if (a == b)
      throw ConfigError("edge list line " + std::to_string(lineno) +
                        ": self-loop '" + a + "'");
    g.add_edge(a, b);
  }
  return g;
}

AdjacencyGraph AdjacencyGraph::from_edge_list(const std::string& text) {
  std::istringstream in(text);
  return from_edge_list(in);
}

int AdjacencyGraph::unit_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw ConfigError("unknown areal unit '" + id + "'");
  return it->second;
}

bool AdjacencyGraph::has_unit(const std::string& id) const {
  return index_.count(id) > 0;
}

bool AdjacencyGraph::adjacent(int i, int j) const {
  if (i == j) return false;
  if (i > j) std::swap(i, j);
  return edge_lookup_.count(edge_key(i, j)) > 0;
}

Eigen::MatrixXd AdjacencyGraph::adjacency_matrix() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n(), n());
  for (const auto& [i, j] : edges_) {
    A(i, j) = 1.0;
    A(j, i) = 1.0;
  }
  return A;
}

int MultivariateSupport::row_index(int t, const Cell& cell) const {
  const auto& cells = prediction_cells.at(t);
  auto it = std::lower_bound(cells.begin(), cells.end(), cell);
  if (it == cells.end() || !(*it == cell))
    throw ConfigError("cell (variable " + std::to_string(cell.variable + 1) +
                      ", unit index " + std::to_string(cell.unit) +
                      ") is not in the prediction support at t=" +
                      std::to_string(t + 1));
  return static_cast<int>(it - cells.begin());
}

std::vector<int> MultivariateSupport::observed_row_indices(int t) const {
  std::vector<int> rows;
  rows.reserve(observed_cells[t].size());
  for (const Cell& c : observed_cells[t]) rows.push_back(row_index(t, c));
  return rows;
}

MultivariateSupport MultivariateSupport::from_roster_csv(
    std::istream& in, const AdjacencyGraph& graph) {
  Csv csv = read_csv(in);
  csv.require_columns({"variable", "time", "unit", "observed"},
                      "support roster");
  const int vi = csv.column("variable");
  const int ti = csv.column("time");
  const int ui = csv.column("unit");
  const int oi = csv.column("observed");

  MultivariateSupport s;
  struct Row {
    int t;
    Cell cell;
    bool observed;
  };
  std::vector<Row> rows;
  rows.reserve(csv.rows.size());
  for (std::size_t k = 0; k < csv.rows.size(); ++k) {
    const auto& r = csv.rows[k];
    int variable = csv.int_at(k, vi);
    int time = csv.int_at(k, ti);
    int obs = csv.int_at(k, oi);
    if (variable < 1) throw ConfigError("support roster: variable must be >= 1");
    if (time < 1) throw ConfigError("support roster: time must be >= 1");
    if (obs != 0 && obs != 1)
      throw ConfigError("support roster: observed must be 0 or 1");
    int unit = graph.unit_index(r[ui]);
    s.L = std::max(s.L, variable);
    s.T = std::max(s.T, time);
    rows.push_back({time - 1, Cell{variable - 1, unit}, obs == 1});
  }
  if (rows.empty()) throw ConfigError("support roster: no cells");

  s.prediction_cells.assign(s.T, {});
  s.observed_cells.assign(s.T, {});
  std::vector<std::vector<std::pair<Cell, bool>>> per_t(s.T);
  for (const Row& r : rows) per_t[r.t].push_back({r.cell, r.observed});
  for (int t = 0; t < s.T; ++t) {
    auto& v = per_t[t];
    std::sort(v.begin(), v.end());
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k].first == v[k - 1].first)
        throw ConfigError("support roster: duplicate cell at t=" +
                          std::to_string(t + 1));
    for (const auto& [cell, obs] : v) {
      s.prediction_cells[t].push_back(cell);
      if (obs) s.observed_cells[t].push_back(cell);
    }
  }

  s.time_windows.assign(s.L, {0, 0});
  for (int t = 0; t < s.T; ++t) {
    for (const Cell& c : s.prediction_cells[t]) {
      auto& w = s.time_windows[c.variable];
      if (w.first == 0) {
        w = {t + 1, t + 1};
      } else {
        w.second = t + 1;
      }
    }
  }
  s.validate(graph);
  return s;
}

std::string MultivariateSupport::to_roster_csv(const AdjacencyGraph& graph) const {
  std::string out = "variable,time,unit,observed\n";
  for (int t = 0; t < T; ++t) {
    std::vector<int> obs_rows = observed_row_indices(t);
    std::size_t next = 0;
    for (int i = 0; i < N(t); ++i) {
      const Cell& c = prediction_cells[t][i];
      bool observed = next < obs_rows.size() && obs_rows[next] == i;
      if (observed) ++next;
      out += std::to_string(c.variable + 1) + "," + std::to_string(t + 1) +
             "," + graph.units()[c.unit].id + "," + (observed ? "1" : "0") +
             "\n";
    }
  }
  return out;
}

MultivariateSupport MultivariateSupport::full(const AdjacencyGraph& graph,
                                              int L, int T) {
  MultivariateSupport s;
  s.L = L;
  s.T = T;
  s.prediction_cells.assign(T, {});
  s.observed_cells.assign(T, {});
  std::vector<Cell> cells;
  for (int l = 0; l < L; ++l)
    for (int u = 0; u < graph.n(); ++u) cells.push_back({l, u});
  std::sort(cells.begin(), cells.end());
  for (int t = 0; t < T; ++t) {
    s.prediction_cells[t] = cells;
    s.observed_cells[t] = cells;
  }
  s.time_windows.assign(L, {1, T});
  return s;
}

void MultivariateSupport::validate(const AdjacencyGraph& graph) const {
  if (L < 1 || T < 1) throw ConfigError("support: L and T must be >= 1");
  if (static_cast<int>(prediction_cells.size()) != T ||
      static_cast<int>(observed_cells.size()) != T)
    throw ConfigError("support: per-time cell lists do not match T");
  for (int t = 0; t < T; ++t) {
    if (!std::is_sorted(prediction_cells[t].begin(), prediction_cells[t].end()))
      throw ConfigError("support: prediction cells not in canonical order");
    for (const Cell& c : prediction_cells[t]) {
      if (c.variable < 0 || c.variable >= L)
        throw ConfigError("support: variable index out of range");
      if (c.unit < 0 || c.unit >= graph.n())
        throw ConfigError("support: unit index out of range");
    }
    // observed subset of prediction, same order
    std::size_t next = 0;
    for (const Cell& c : observed_cells[t]) {
      while (next < prediction_cells[t].size() &&
             !(prediction_cells[t][next] == c))
        ++next;
      if (next == prediction_cells[t].size())
        throw ConfigError("support: observed cell missing from prediction "
                          "support at t=" + std::to_string(t + 1));
      ++next;
    }
  }
  for (int l = 0; l < L; ++l) {
    auto [lo, hi] = time_windows[l];
    if (lo < 1 || lo > hi || hi > T)
      throw ConfigError("support: bad time window for variable " +
                        std::to_string(l + 1));
  }
}

Eigen::MatrixXd block_adjacency(const AdjacencyGraph& graph,
                                const MultivariateSupport& support, int t,
                                Coupling coupling) {
  const auto& cells = support.prediction_cells.at(t);
  const int n = static_cast<int>(cells.size());
  for (const Cell& c : cells)
    if (c.unit < 0 || c.unit >= graph.n())
      throw ConfigError("block_adjacency: cell references unit outside graph");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Cell& a = cells[i];
      const Cell& b = cells[j];
      bool edge = false;
      if (a.variable == b.variable) {
        edge = graph.adjacent(a.unit, b.unit);
      } else if (coupling == Coupling::same_unit) {
        edge = a.unit == b.unit;
      }
      if (edge) {
        A(i, j) = 1.0;
        A(j, i) = 1.0;
      }
    }
  }
  return A;
}

Eigen::MatrixXd car_target_precision(const Eigen::MatrixXd& A) {
  return Eigen::MatrixXd::Identity(A.rows(), A.cols()) - A;
}

AdjacencyGraph lattice_graph(int rows, int cols) {
  if (rows < 1 || cols < 1)
    throw ConfigError("lattice: rows and cols must be >= 1");
  AdjacencyGraph g;
  auto name = [](int i, int j) {
    return "r" + std::to_string(i) + "c" + std::to_string(j);
  };
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j + 1 < cols) g.add_edge(name(i, j), name(i, j + 1));
      if (i + 1 < rows) g.add_edge(name(i, j), name(i + 1, j));
    }
  }
  return g;
}

}  // namespace mstm

#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mstm {

struct ArealUnit {
  std::string id;
  int index = 0;  // 0-based, contiguous within the roster
};

// Symmetric 0/1 spatial graph over named areal units. Units are registered
// in first-appearance order in the edge list.
class AdjacencyGraph {
 public:
  // Line-oriented edge list: two whitespace-separated unit ids per line,
  // '#' starts a comment. Self-loops are rejected with the line number.
  static AdjacencyGraph from_edge_list(std::istream& in);
  static AdjacencyGraph from_edge_list(const std::string& text);

  int n() const { return static_cast<int>(units_.size()); }
  const std::vector<ArealUnit>& units() const { return units_; }
  // Throws ConfigError for ids not present in the graph.
  int unit_index(const std::string& id) const;
  bool has_unit(const std::string& id) const;
  bool adjacent(int i, int j) const;
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  Eigen::MatrixXd adjacency_matrix() const;  // n x n, zero diagonal

  int add_edge(const std::string& a, const std::string& b);  // returns edges added (0 if dup)

 private:
  int intern(const std::string& id);

  std::vector<ArealUnit> units_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::pair<int, int>> edges_;            // i < j, insertion order
  std::unordered_map<long long, bool> edge_lookup_;   // key = i * n_max + j
};

// A cell is one (variable, unit) pair; rows of every per-time matrix follow
// the deterministic cell ordering (variable, then unit index).
struct Cell {
  int variable = 0;  // 0-based
  int unit = 0;      // 0-based unit index in the graph
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Indexed prediction/observed supports per time point.
struct MultivariateSupport {
  int L = 0;
  int T = 0;
  std::vector<std::vector<Cell>> prediction_cells;  // per t, sorted
  std::vector<std::vector<Cell>> observed_cells;    // per t, subset, same order
  std::vector<std::pair<int, int>> time_windows;    // per variable, 1-based [lo, hi]

  int N(int t) const { return static_cast<int>(prediction_cells[t].size()); }
  int n_obs(int t) const { return static_cast<int>(observed_cells[t].size()); }

  // Row of a cell within prediction_cells[t]; throws if absent.
  int row_index(int t, const Cell& cell) const;
  // Positions of the observed cells within prediction_cells[t].
  std::vector<int> observed_row_indices(int t) const;

  // Columns: variable,time,unit,observed (variable/time 1-based in file).
  static MultivariateSupport from_roster_csv(std::istream& in,
                                             const AdjacencyGraph& graph);
  std::string to_roster_csv(const AdjacencyGraph& graph) const;

  // Full support over all units/variables/times, everything observed.
  static MultivariateSupport full(const AdjacencyGraph& graph, int L, int T);

  void validate(const AdjacencyGraph& graph) const;
};

enum class Coupling { none, same_unit };

// Per-time multivariate block adjacency A_t over prediction_cells[t]:
// within-variable blocks replicate the spatial graph restricted to the units
// present for that variable; same_unit coupling additionally links
// co-located cells of different variables. Zero diagonal, symmetric.
Eigen::MatrixXd block_adjacency(const AdjacencyGraph& graph,
                                const MultivariateSupport& support, int t,
                                Coupling coupling);

// CAR-style target precision Q = I - A (possibly indefinite; the prior
// construction applies a nearest-PSD step downstream).
Eigen::MatrixXd car_target_precision(const Eigen::MatrixXd& A);

// 0-based rook-neighbour lattice graph with unit ids "r<i>c<j>".
AdjacencyGraph lattice_graph(int rows, int cols);

}  // namespace mstm

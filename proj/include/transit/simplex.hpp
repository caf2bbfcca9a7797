#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace transit {

// Revised primal/dual simplex over variables with lower bound 0 and no upper
// bound, built for column generation:
//
//   - rows and columns are appended incrementally and never removed, so a
//     re-solve after cost changes or new columns starts warm,
//   - the basis inverse is maintained densely and patched on row addition,
//   - adding a violated <= row leaves the basis dual-feasible and the dual
//     simplex restores primal feasibility (the usual cutting-plane pattern),
//   - Dantzig pricing with a Bland fallback after 50 non-improving pivots.
class RevisedSimplex {
 public:
  enum class RowSense { Equal, LessEqual };

  // Adds a row whose coefficients on *existing* columns are `col_entries`;
  // the listed columns gain the matching entry. Inequality rows get a slack
  // that enters the basis immediately (at a negative value when the row cuts
  // off the current point). Equality rows start without a basic variable; the
  // caller must attach one via attach_row_basis before solving.
  int add_row(RowSense sense, double rhs, std::span<const std::pair<int, double>> col_entries);

  // Adds a structural column. Entries may reference any existing row.
  int add_column(double cost, std::span<const std::pair<int, double>> entries);

  // Makes `col` basic in equality row `row`. The column must consist of the
  // single entry (row, 1.0); in this artifact that is the always-feasible
  // penalty column of a commodity.
  void attach_row_basis(int row, int col);

  void set_cost(int col, double cost);

  struct Result {
    double objective = 0.0;
    int pivots = 0;
  };
  // Dual phase first when the basis is primal-infeasible, then primal phase.
  Result solve();

  int row_count() const { return static_cast<int>(rhs_.size()); }
  int column_count() const { return static_cast<int>(cols_.size()); }

  double primal_value(int col) const;
  // Row duals; <= rows satisfy dual <= 0 at optimality.
  const std::vector<double>& duals() const { return duals_; }
  double reduced_cost(int col) const;
  double objective() const;

  // max |Ax - b| over equality rows plus max constraint violation of <= rows
  // and variable-bound violation, recomputed from scratch.
  double residual() const;

 private:
  struct Column {
    double cost = 0.0;
    bool slack = false;
    std::vector<std::pair<int, double>> entries;
  };

  double* binv_row(int r) { return binv_.data() + static_cast<std::size_t>(r) * stride_; }
  const double* binv_row(int r) const {
    return binv_.data() + static_cast<std::size_t>(r) * stride_;
  }
  void ensure_capacity(int rows);
  void compute_duals();
  double column_dot_row(const Column& c, std::span<const double> v) const;
  void ftran(const Column& c, std::vector<double>& out) const;
  void pivot(int leave_pos, int enter_col, const std::vector<double>& w);
  void refactorize();
  void recompute_basics();
  int price_entering(bool bland) const;
  bool primal_step(bool bland);
  bool dual_step(bool bland);

  std::vector<Column> cols_;
  std::vector<double> rhs_;
  std::vector<RowSense> sense_;
  std::vector<int> basic_;      // per row: basic column, -1 while unattached
  std::vector<int> basic_pos_;  // per column: row position if basic, else -1
  std::vector<double> xb_;      // basic values, per row position
  std::vector<double> duals_;   // per row, refreshed by compute_duals
  std::vector<double> binv_;    // dense basis inverse, row-major with stride_
  int stride_ = 0;
  int pivots_since_refactor_ = 0;
  long total_pivots_ = 0;
};

}  // namespace transit

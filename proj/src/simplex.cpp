#include "transit/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace transit {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr int kRefactorPeriod = 256;
constexpr int kBlandTrigger = 50;
constexpr long kPivotLimit = 2000000;
}  // namespace

void RevisedSimplex::ensure_capacity(int rows) {
  if (rows <= stride_) return;
  int new_stride = std::max(rows, std::max(16, stride_ + stride_ / 2));
  std::vector<double> grown(static_cast<std::size_t>(new_stride) * new_stride, 0.0);
  for (int r = 0; r < row_count(); ++r)
    std::copy_n(binv_row(r), row_count(), grown.data() + static_cast<std::size_t>(r) * new_stride);
  binv_ = std::move(grown);
  stride_ = new_stride;
}

int RevisedSimplex::add_row(RowSense sense, double rhs,
                            std::span<const std::pair<int, double>> col_entries) {
  int r = row_count();
  int m_old = r;
  ensure_capacity(r + 1);
  rhs_.push_back(rhs);
  sense_.push_back(sense);
  duals_.push_back(0.0);
  binv_row(r)[r] = 1.0;

  // Coefficients of the new row on the current basic columns, by basis
  // position. Columns added later reference the row directly.
  std::vector<std::pair<int, double>> arow;
  for (const auto& [col, v] : col_entries) {
    if (col < 0 || col >= column_count())
      throw std::invalid_argument("row entry references a missing column");
    cols_[col].entries.emplace_back(r, v);
    if (basic_pos_[col] >= 0) arow.emplace_back(basic_pos_[col], v);
  }

  // Basis grows by the new row with a unit variable on the diagonal (the
  // slack, or the penalty column attached later):
  //   B' = [[B, 0], [a_B, 1]]  =>  B'^{-1} = [[B^{-1}, 0], [-a_B B^{-1}, 1]].
  double val = rhs;
  if (!arow.empty()) {
    double* br = binv_row(r);
    for (const auto& [pos, v] : arow) {
      const double* bp = binv_row(pos);
      for (int j = 0; j < m_old; ++j) br[j] -= v * bp[j];
      val -= v * xb_[pos];
    }
  }
  xb_.push_back(val);

  if (sense == RowSense::Equal) {
    basic_.push_back(-1);
    return r;
  }
  Column slack;
  slack.slack = true;
  slack.entries = {{r, 1.0}};
  cols_.push_back(std::move(slack));
  basic_pos_.push_back(r);
  basic_.push_back(column_count() - 1);
  return r;
}

int RevisedSimplex::add_column(double cost, std::span<const std::pair<int, double>> entries) {
  Column c;
  c.cost = cost;
  c.entries.assign(entries.begin(), entries.end());
  for (const auto& [r, v] : c.entries) {
    (void)v;
    if (r < 0 || r >= row_count())
      throw std::invalid_argument("column entry references a missing row");
  }
  cols_.push_back(std::move(c));
  basic_pos_.push_back(-1);
  return column_count() - 1;
}

void RevisedSimplex::attach_row_basis(int row, int col) {
  if (basic_[row] != -1) throw std::logic_error("row already has a basic variable");
  const Column& c = cols_[col];
  if (c.entries.size() != 1 || c.entries[0].first != row || c.entries[0].second != 1.0)
    throw std::logic_error("attach_row_basis needs a unit column for the row");
  basic_[row] = col;
  basic_pos_[col] = row;
}

void RevisedSimplex::set_cost(int col, double cost) { cols_[col].cost = cost; }

double RevisedSimplex::primal_value(int col) const {
  int pos = basic_pos_[col];
  return pos >= 0 ? xb_[pos] : 0.0;
}

double RevisedSimplex::objective() const {
  double obj = 0.0;
  for (int r = 0; r < row_count(); ++r)
    if (basic_[r] >= 0) obj += cols_[basic_[r]].cost * xb_[r];
  return obj;
}

void RevisedSimplex::compute_duals() {
  int m = row_count();
  for (int j = 0; j < m; ++j) duals_[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    int bc = basic_[i];
    if (bc < 0) continue;
    double c = cols_[bc].cost;
    if (c == 0.0) continue;
    const double* bi = binv_row(i);
    for (int j = 0; j < m; ++j) duals_[j] += c * bi[j];
  }
}

double RevisedSimplex::column_dot_row(const Column& c, std::span<const double> v) const {
  double s = 0.0;
  for (const auto& [r, a] : c.entries) s += a * v[r];
  return s;
}

void RevisedSimplex::ftran(const Column& c, std::vector<double>& out) const {
  int m = row_count();
  out.assign(m, 0.0);
  for (const auto& [r, a] : c.entries) {
    if (a == 0.0) continue;
    for (int i = 0; i < m; ++i) out[i] += a * binv_row(i)[r];
  }
}

double RevisedSimplex::reduced_cost(int col) const {
  const Column& c = cols_[col];
  return c.cost - column_dot_row(c, duals_);
}

void RevisedSimplex::pivot(int leave_pos, int enter_col, const std::vector<double>& w) {
  int m = row_count();
  double piv = w[leave_pos];
  if (std::abs(piv) < kPivotTol) throw std::runtime_error("simplex: vanishing pivot");

  int old = basic_[leave_pos];
  if (old >= 0) basic_pos_[old] = -1;
  basic_[leave_pos] = enter_col;
  basic_pos_[enter_col] = leave_pos;

  double* br = binv_row(leave_pos);
  double inv = 1.0 / piv;
  for (int j = 0; j < m; ++j) br[j] *= inv;
  double theta = xb_[leave_pos] * inv;
  xb_[leave_pos] = theta;
  for (int i = 0; i < m; ++i) {
    if (i == leave_pos) continue;
    double f = w[i];
    if (f == 0.0) continue;
    double* bi = binv_row(i);
    for (int j = 0; j < m; ++j) bi[j] -= f * br[j];
    xb_[i] -= f * theta;
  }
  ++pivots_since_refactor_;
  ++total_pivots_;
  if (pivots_since_refactor_ >= kRefactorPeriod) refactorize();
}

void RevisedSimplex::refactorize() {
  int m = row_count();
  std::vector<double> mat(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    int bc = basic_[i];
    if (bc < 0) throw std::runtime_error("simplex: refactorize with an unattached row");
    for (const auto& [r, v] : cols_[bc].entries) mat[static_cast<std::size_t>(r) * m + i] += v;
  }
  std::vector<double> inv(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) inv[static_cast<std::size_t>(i) * m + i] = 1.0;
  for (int c = 0; c < m; ++c) {
    int best = -1;
    double mag = 0.0;
    for (int r = c; r < m; ++r) {
      double v = std::abs(mat[static_cast<std::size_t>(r) * m + c]);
      if (v > mag) {
        mag = v;
        best = r;
      }
    }
    if (best < 0 || mag < kPivotTol) throw std::runtime_error("simplex: singular basis");
    if (best != c)
      for (int j = 0; j < m; ++j) {
        std::swap(mat[static_cast<std::size_t>(best) * m + j],
                  mat[static_cast<std::size_t>(c) * m + j]);
        std::swap(inv[static_cast<std::size_t>(best) * m + j],
                  inv[static_cast<std::size_t>(c) * m + j]);
      }
    double ip = 1.0 / mat[static_cast<std::size_t>(c) * m + c];
    for (int j = 0; j < m; ++j) {
      mat[static_cast<std::size_t>(c) * m + j] *= ip;
      inv[static_cast<std::size_t>(c) * m + j] *= ip;
    }
    for (int r = 0; r < m; ++r) {
      if (r == c) continue;
      double f = mat[static_cast<std::size_t>(r) * m + c];
      if (f == 0.0) continue;
      for (int j = 0; j < m; ++j) {
        mat[static_cast<std::size_t>(r) * m + j] -= f * mat[static_cast<std::size_t>(c) * m + j];
        inv[static_cast<std::size_t>(r) * m + j] -= f * inv[static_cast<std::size_t>(c) * m + j];
      }
    }
  }
  // inv rows are indexed by basis position because B was assembled by position.
  ensure_capacity(m);
  for (int i = 0; i < m; ++i)
    std::copy_n(inv.data() + static_cast<std::size_t>(i) * m, m, binv_row(i));
  pivots_since_refactor_ = 0;
  recompute_basics();
}

void RevisedSimplex::recompute_basics() {
  int m = row_count();
  for (int i = 0; i < m; ++i) {
    const double* bi = binv_row(i);
    double v = 0.0;
    for (int j = 0; j < m; ++j) v += bi[j] * rhs_[j];
    xb_[i] = v;
  }
}

int RevisedSimplex::price_entering(bool bland) const {
  int n = column_count();
  int pick = -1;
  double best = -kCostTol;
  for (int j = 0; j < n; ++j) {
    if (basic_pos_[j] >= 0) continue;
    double d = cols_[j].cost - column_dot_row(cols_[j], duals_);
    if (d < best) {
      if (bland) return j;
      best = d;
      pick = j;
    }
  }
  return pick;
}

bool RevisedSimplex::primal_step(bool bland) {
  compute_duals();
  int enter = price_entering(bland);
  if (enter < 0) return false;

  static thread_local std::vector<double> w;
  ftran(cols_[enter], w);
  int m = row_count();
  double theta = 0.0;
  int leave = -1;
  for (int i = 0; i < m; ++i) {
    if (w[i] <= kPivotTol) continue;
    double ratio = std::max(xb_[i], 0.0) / w[i];
    if (leave < 0 || ratio < theta - 1e-12 ||
        (ratio < theta + 1e-9 &&
         (bland ? basic_[i] < basic_[leave] : std::abs(w[i]) > std::abs(w[leave])))) {
      theta = ratio;
      leave = i;
    }
  }
  if (leave < 0) throw std::runtime_error("simplex: unbounded problem");
  pivot(leave, enter, w);
  return true;
}

bool RevisedSimplex::dual_step(bool bland) {
  int m = row_count();
  int leave = -1;
  double worst = -kFeasTol;
  for (int i = 0; i < m; ++i) {
    if (xb_[i] < worst) {
      worst = xb_[i];
      leave = i;
      if (bland) break;
    }
  }
  if (leave < 0) return false;

  compute_duals();
  const double* brow = binv_row(leave);
  int n = column_count();
  int enter = -1;
  double best_ratio = 0.0, best_alpha = 0.0;
  for (int j = 0; j < n; ++j) {
    if (basic_pos_[j] >= 0) continue;
    double alpha = 0.0;
    for (const auto& [r, v] : cols_[j].entries) alpha += v * brow[r];
    if (alpha >= -kPivotTol) continue;
    double d = cols_[j].cost - column_dot_row(cols_[j], duals_);
    double ratio = d / (-alpha);
    if (enter < 0 || ratio < best_ratio - 1e-12 ||
        (ratio < best_ratio + 1e-9 &&
         (bland ? j < enter : std::abs(alpha) > std::abs(best_alpha)))) {
      best_ratio = ratio;
      best_alpha = alpha;
      enter = j;
    }
  }
  if (enter < 0) throw std::runtime_error("simplex: primal infeasible");

  static thread_local std::vector<double> w;
  ftran(cols_[enter], w);
  pivot(leave, enter, w);
  return true;
}

RevisedSimplex::Result RevisedSimplex::solve() {
  for (int r = 0; r < row_count(); ++r)
    if (basic_[r] < 0) throw std::logic_error("simplex: equality row without a basic variable");

  Result res;
  long start = total_pivots_;
  int stagnant = 0;
  double last_obj = objective();

  while (true) {
    bool bland = stagnant > kBlandTrigger;
    if (!dual_step(bland)) break;
    ++res.pivots;
    double obj = objective();
    stagnant = obj > last_obj + 1e-12 * (1.0 + std::abs(obj)) ? 0 : stagnant + 1;
    last_obj = obj;
    if (total_pivots_ - start > kPivotLimit) throw std::runtime_error("simplex: pivot limit (dual)");
  }

  stagnant = 0;
  last_obj = objective();
  while (true) {
    bool bland = stagnant > kBlandTrigger;
    if (!primal_step(bland)) break;
    ++res.pivots;
    double obj = objective();
    stagnant = obj < last_obj - 1e-12 * (1.0 + std::abs(obj)) ? 0 : stagnant + 1;
    last_obj = obj;
    if (total_pivots_ - start > kPivotLimit)
      throw std::runtime_error("simplex: pivot limit (primal)");
  }

  compute_duals();
  res.objective = objective();
  return res;
}

double RevisedSimplex::residual() const {
  int m = row_count();
  std::vector<double> ax(m, 0.0);
  for (int i = 0; i < m; ++i) {
    int bc = basic_[i];
    if (bc < 0) continue;
    for (const auto& [r, v] : cols_[bc].entries) ax[r] += v * xb_[i];
  }
  double res = 0.0;
  for (int r = 0; r < m; ++r) {
    double gap = ax[r] - rhs_[r];
    if (sense_[r] == RowSense::Equal)
      res = std::max(res, std::abs(gap));
    else
      res = std::max(res, gap);
  }
  for (int i = 0; i < m; ++i) res = std::max(res, -xb_[i]);
  return res;
}

}  // namespace transit

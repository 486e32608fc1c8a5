#pragma once

#include <optional>
#include <vector>

#include "sdq/model.hpp"
#include "sdq/window.hpp"

namespace sdq {

// Weight function omega on states 1..level.  Signed values are accepted (the
// QSD module evaluates omega = c - theta); positivity-dependent invariants are
// skipped and flagged downstream when any value is negative.
class WeightFunction {
 public:
  WeightFunction() = default;
  static WeightFunction zero(int level);
  static WeightFunction constant(double v, int level);
  static WeightFunction from_sequence(const Sequence& s, int level);
  static WeightFunction from_vector(std::vector<double> values);  // values[i-1] = omega_i

  double at(State i) const;
  int level() const { return static_cast<int>(v_.size()); }
  bool nonnegative() const;

  WeightFunction plus_killing(const SingleDeathModel& m) const;
  WeightFunction plus_constant(double q) const;

 private:
  std::vector<double> v_;
};

// Triangular tables G_n^{(k)}(omega), 1 <= n <= k <= N, with the derived
// W^(omega)(i,j) and Z^(omega)(i,j).  Columns are built independently, fixed k
// descending n, with memoized incremental tail sums so a full table costs
// O(N^2) tail queries.
class PotentialTable {
 public:
  PotentialTable(const SingleDeathModel& m, WeightFunction omega, int level);

  double g(State n, State k) const;  // G_n^{(k)}(omega), 1 <= n <= k <= level
  double w(State i, State j) const;  // W^(omega)(i,j); 0 when i >= j
  double z(State i, State j) const;  // Z^(omega)(i,j); 0 when i >= j

  int level() const { return level_; }
  const WeightFunction& weight() const { return omega_; }
  const SingleDeathModel& model() const { return *model_; }
  bool has_negative_entries() const { return negative_entries_ > 0; }
  long negative_entries() const { return negative_entries_; }

 private:
  const SingleDeathModel* model_;
  WeightFunction omega_;
  int level_ = 0;
  // column k (1-based) stores g_cols_[k-1][n-1] = G_n^{(k)} for n = 1..k and
  // cum_cols_[k-1][m-1] = sum_{l=m..k} G_l^{(k)} for m = 1..k
  std::vector<std::vector<double>> g_cols_;
  std::vector<std::vector<double>> cum_cols_;
  long negative_entries_ = 0;
  void build_column(State k);
};

// Partial terms W^(omega,0..n_terms)(i,j) of the series expansion
// W^(omega)(i,j) = sum_n W^(omega,n)(i,j); the series is finite (terms vanish
// for n >= j-i).
std::vector<double> w_series(const SingleDeathModel& m, const WeightFunction& omega, State i,
                             State j, int n_terms);

// Z^(omega)(i,infinity) = 1 + sum_{u>i} omega_u W^(omega)(i,u) along the
// schedule; requires omega >= 0.  When the hypothesis series
// sum omega_u W(0,u) converges, a tail estimate e^C * tail(C) is attached.
SeriesDiagnostic z_infinity(const SingleDeathModel& m, const WeightFunction& omega, State i,
                            const TruncationWindow& w);

// Harmonic function h(i) = Z^(c)(i,inf)/Z^(c)(0,inf) with per-entry tail
// residual estimates; requires the small-killing series to converge.
struct HarmonicFunction {
  std::vector<double> h;           // h[i] for i = 0..n_max
  std::vector<double> z_inf;       // Z^(c)(i,inf) partials at the window top
  double z0_infinity = 1.0;        // Z^(c)(0,inf)
  std::vector<double> tail_bound;  // per-entry residual estimate for h[i]
  double floor() const { return 1.0 / z0_infinity; }
};

HarmonicFunction harmonic_h(const SingleDeathModel& m, const TruncationWindow& w);

}  // namespace sdq

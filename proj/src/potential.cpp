#include "sdq/potential.hpp"

#include <algorithm>
#include <cmath>

namespace sdq {

// ---------------------------------------------------------------------------
// WeightFunction
// ---------------------------------------------------------------------------

WeightFunction WeightFunction::zero(int level) {
  WeightFunction w;
  w.v_.assign(static_cast<std::size_t>(std::max(0, level)), 0.0);
  return w;
}

WeightFunction WeightFunction::constant(double v, int level) {
  WeightFunction w;
  w.v_.assign(static_cast<std::size_t>(std::max(0, level)), v);
  return w;
}

WeightFunction WeightFunction::from_sequence(const Sequence& s, int level) {
  WeightFunction w;
  w.v_.resize(static_cast<std::size_t>(std::max(0, level)));
  for (int i = 1; i <= level; ++i) w.v_[static_cast<std::size_t>(i) - 1] = s.at(i);
  return w;
}

WeightFunction WeightFunction::from_vector(std::vector<double> values) {
  WeightFunction w;
  w.v_ = std::move(values);
  return w;
}

double WeightFunction::at(State i) const {
  if (i < 1 || static_cast<std::size_t>(i) > v_.size())
    fail(Err::LevelExceeded, "weight queried at state " + std::to_string(i) +
                                 " beyond its level " + std::to_string(v_.size()));
  return v_[static_cast<std::size_t>(i) - 1];
}

bool WeightFunction::nonnegative() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x >= 0.0; });
}

WeightFunction WeightFunction::plus_killing(const SingleDeathModel& m) const {
  WeightFunction w = *this;
  for (std::size_t i = 0; i < w.v_.size(); ++i) w.v_[i] += m.killing(static_cast<State>(i) + 1);
  return w;
}

WeightFunction WeightFunction::plus_constant(double q) const {
  WeightFunction w = *this;
  for (double& x : w.v_) x += q;
  return w;
}

// ---------------------------------------------------------------------------
// PotentialTable
// ---------------------------------------------------------------------------

PotentialTable::PotentialTable(const SingleDeathModel& m, WeightFunction omega, int level)
    : model_(&m), omega_(std::move(omega)), level_(level) {
  if (level_ < 1) fail(Err::InvalidArgument, "table level must be >= 1");
  if (omega_.level() < level_)
    fail(Err::LevelExceeded, "weight function shorter than requested table level");
  g_cols_.resize(static_cast<std::size_t>(level_));
  cum_cols_.resize(static_cast<std::size_t>(level_));
  for (State k = 1; k <= level_; ++k) build_column(k);
}

void PotentialTable::build_column(State k) {
  auto& g = g_cols_[static_cast<std::size_t>(k) - 1];
  auto& cum = cum_cols_[static_cast<std::size_t>(k) - 1];
  g.assign(static_cast<std::size_t>(k), 0.0);
  cum.assign(static_cast<std::size_t>(k), 0.0);
  const auto& m = *model_;

  g[static_cast<std::size_t>(k) - 1] = 1.0;    // G_k^{(k)} = 1
  cum[static_cast<std::size_t>(k) - 1] = 1.0;  // suffix sums grow as n descends

  const bool finite_support = m.up().finite_support();

  for (State n = k - 1; n >= 1; --n) {
    // inner = sum_{l=n+1}^{k} q_n^{(l)}(omega) G_l^{(k)}
    //       = omega_n * cum(n+1) + sum_l tail_up(n,l) G_l^{(k)}
    CompensatedSum inner;
    double cum_next = cum[static_cast<std::size_t>(n)];  // sum_{l=n+1}^{k} G_l
    inner.add(omega_.at(n) * cum_next);

    if (finite_support) {
      // tail_up(n,l) is a step function of l with steps at the support points:
      // sum_l tail_up(n,l) G_l = sum_{(j,r)} r * sum_{l=n+1}^{min(j,k)} G_l
      double beyond = m.up().tail(n, k + 1);  // support past the column end
      if (beyond != 0.0) inner.add(beyond * cum_next);
      m.up().visit(n, k, [&](State j, double r) {
        double cumval = cum[static_cast<std::size_t>(n)];  // cum(n+1)
        if (j < k) cumval -= cum[static_cast<std::size_t>(j)];  // minus cum(j+1)
        inner.add(r * cumval);
      });
    } else {
      // incremental analytic tails: one tail query per (n,k), then walk down
      double tail = m.up().tail(n, n + 1);
      for (State l = n + 1; l <= k; ++l) {
        inner.add(tail * g[static_cast<std::size_t>(l) - 1]);
        tail -= m.up().rate(n, l);
      }
    }

    double val = inner.value() / m.down(n);
    if (!std::isfinite(val))
      fail(Err::NumericalOverflow, "G recursion overflowed at column " + std::to_string(k));
    if (val < 0.0) ++negative_entries_;
    g[static_cast<std::size_t>(n) - 1] = val;
    cum[static_cast<std::size_t>(n) - 1] = cum[static_cast<std::size_t>(n)] + val;
  }
}

double PotentialTable::g(State n, State k) const {
  if (k < 1 || k > level_ || n < 1 || n > k)
    fail(Err::LevelExceeded, "g(n,k) out of table range");
  return g_cols_[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(n) - 1];
}

double PotentialTable::w(State i, State j) const {
  if (i < 0 || j < 0 || j > level_ || i > level_)
    fail(Err::LevelExceeded, "w(i,j) out of table range");
  if (i >= j) return 0.0;
  // W(i,j) = (sum_{k=i+1}^{j} G_k^{(j)}) / q_{j,j-1}
  return cum_cols_[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(i)] /
         model_->down(j);
}

double PotentialTable::z(State i, State j) const {
  if (i < 0 || j < 0 || j > level_ || i > level_)
    fail(Err::LevelExceeded, "z(i,j) out of table range");
  if (i >= j) return 0.0;
  CompensatedSum s;
  s.add(1.0);
  for (State u = i + 1; u < j; ++u) s.add(omega_.at(u) * w(i, u));
  return s.value();
}

// ---------------------------------------------------------------------------
// series expansion
// ---------------------------------------------------------------------------

std::vector<double> w_series(const SingleDeathModel& m, const WeightFunction& omega, State i,
                             State j, int n_terms) {
  if (!(0 <= i && i < j)) fail(Err::InvalidQuery, "w_series requires 0 <= i < j");
  if (n_terms < 0) fail(Err::InvalidArgument, "n_terms must be >= 0");
  PotentialTable plain(m, WeightFunction::zero(j), j);

  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n_terms) + 1);

  // row[u-i-1] = W^(omega,n)(i,u) for u in (i, j]
  std::vector<double> row(static_cast<std::size_t>(j - i), 0.0);
  for (State u = i + 1; u <= j; ++u) row[static_cast<std::size_t>(u - i) - 1] = plain.w(i, u);
  terms.push_back(row[static_cast<std::size_t>(j - i) - 1]);

  std::vector<double> next(row.size(), 0.0);
  for (int n = 1; n <= n_terms; ++n) {
    for (State v = i + 1; v <= j; ++v) {
      CompensatedSum s;
      for (State u = i + 1; u < v; ++u)
        s.add(row[static_cast<std::size_t>(u - i) - 1] * omega.at(u) * plain.w(u, v));
      next[static_cast<std::size_t>(v - i) - 1] = s.value();
    }
    row.swap(next);
    terms.push_back(row[static_cast<std::size_t>(j - i) - 1]);
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Z(i, infinity) and the harmonic function
// ---------------------------------------------------------------------------

SeriesDiagnostic z_infinity(const SingleDeathModel& m, const WeightFunction& omega, State i,
                            const TruncationWindow& w) {
  if (!omega.nonnegative())
    fail(Err::InvalidQuery, "z_infinity requires a non-negative weight");
  if (i < 0) fail(Err::InvalidQuery, "z_infinity requires i >= 0");
  const int top = w.top();
  if (omega.level() < top) fail(Err::LevelExceeded, "weight shorter than window top");

  PotentialTable tab(m, omega, top);
  SeriesDiagnostic d =
      run_series("Z(" + std::to_string(i) + ",inf)", w,
                 [&](State u) { return u > i ? omega.at(u) * tab.w(i, u) : 0.0; });
  for (double& p : d.partial) p += 1.0;  // Z = 1 + sum

  if (d.verdict == Verdict::Converged) {
    // tail <= e^C * remaining mass of sum omega_u W(0,u), both estimated
    PotentialTable plain(m, WeightFunction::zero(top), top);
    SeriesDiagnostic hyp = run_series("sum omega_u W(0,u)", w,
                                      [&](State u) { return omega.at(u) * plain.w(0, u); });
    if (hyp.verdict == Verdict::Converged && hyp.tail_estimate) {
      double C = hyp.value() + *hyp.tail_estimate;
      d.tail_estimate = std::exp(C) * (*hyp.tail_estimate);
    }
  }
  return d;
}

HarmonicFunction harmonic_h(const SingleDeathModel& m, const TruncationWindow& w) {
  RegimeDiagnostic reg = killing_regime(m, w);
  if (reg.C.verdict != Verdict::Converged)
    fail(Err::SmallKillingNotEstablished,
         "small-killing series sum c_u W(0,u) verdict: " +
             std::string(verdict_name(reg.C.verdict)));

  const int top = w.top();
  WeightFunction c = WeightFunction::zero(top).plus_killing(m);
  PotentialTable tab(m, c, top);

  // C-series tail estimate drives the per-entry residuals
  double tail_c = reg.C.tail_estimate.value_or(0.0);
  double expC = std::exp(reg.C.value() + tail_c);

  HarmonicFunction hf;
  hf.z_inf.assign(static_cast<std::size_t>(top) + 1, 1.0);
  hf.tail_bound.assign(static_cast<std::size_t>(top) + 1, 0.0);
  for (State i = 0; i <= top; ++i) {
    CompensatedSum s;
    s.add(1.0);
    for (State u = i + 1; u <= top; ++u) s.add(c.at(u) * tab.w(i, u));
    hf.z_inf[static_cast<std::size_t>(i)] = s.value();
    hf.tail_bound[static_cast<std::size_t>(i)] = expC * tail_c;
  }
  hf.z0_infinity = hf.z_inf[0];
  hf.h.assign(static_cast<std::size_t>(top) + 1, 1.0);
  for (State i = 0; i <= top; ++i) {
    hf.h[static_cast<std::size_t>(i)] = hf.z_inf[static_cast<std::size_t>(i)] / hf.z0_infinity;
    hf.tail_bound[static_cast<std::size_t>(i)] =
        (hf.tail_bound[static_cast<std::size_t>(i)] +
         hf.h[static_cast<std::size_t>(i)] * expC * tail_c) /
        hf.z0_infinity;
  }
  return hf;
}

}  // namespace sdq

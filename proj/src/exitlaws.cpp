#include "sdq/exitlaws.hpp"

#include <cmath>

namespace sdq::exitlaws {

ExitSolver::ExitSolver(const SingleDeathModel& m, const WeightFunction& omega, State upper,
                       bool with_killing)
    : model_(&m), omega_(omega), upper_(upper), with_killing_(with_killing) {
  if (upper_ < 2) fail(Err::InvalidQuery, "exit solver needs an upper barrier >= 2");
  if (omega_.level() < upper_) fail(Err::LevelExceeded, "weight shorter than the upper barrier");
  WeightFunction eff = with_killing_ ? omega_.plus_killing(m) : omega_;
  table_ = std::make_unique<PotentialTable>(m, std::move(eff), upper_);
}

double ExitSolver::ratio(State a, State i) const {
  double denom = table_->w(a, upper_);
  double num = table_->w(i, upper_);
  if (denom == 0.0 || std::fpclassify(denom) == FP_SUBNORMAL)
    fail(Err::NumericalUnderflow, "W(a,N) underflowed; the ratio is unreliable");
  return num / denom;
}

double ExitSolver::downcross_laplace(State a, State i) const {
  if (!(0 <= a && a < i && i < upper_))
    fail(Err::InvalidQuery, "downcross requires a < i < N");
  return ratio(a, i);
}

double ExitSolver::occupation_transform(State a, State i, State j) const {
  if (!(0 <= a && a < i && i < upper_ && a < j && j < upper_))
    fail(Err::InvalidQuery, "occupation requires a < i,j < N");
  return table_->w(a, j) * ratio(a, i) - table_->w(i, j);
}

double ExitSolver::upcross_laplace(State a, State i) const {
  if (!(0 <= a && a < i && i < upper_))
    fail(Err::InvalidQuery, "upcross requires a < i < N");
  // 1 + sum_{i<j<N} omega_j W^(eff)(i,j) - ratio * (1 + sum_{a<j<N} omega_j W^(eff)(a,j));
  // the sums carry the bare omega even when the table weight is omega + c.
  CompensatedSum si;
  si.add(1.0);
  for (State u = i + 1; u < upper_; ++u) si.add(omega_.at(u) * table_->w(i, u));
  CompensatedSum sa;
  sa.add(1.0);
  for (State u = a + 1; u < upper_; ++u) sa.add(omega_.at(u) * table_->w(a, u));
  return si.value() - ratio(a, i) * sa.value();
}

LimitDiagnostic hit_laplace_limit(const SingleDeathModel& m, const WeightFunction& omega, State a,
                                  State i, const TruncationWindow& w) {
  if (!(0 <= a && a < i)) fail(Err::InvalidQuery, "limit requires a < i");
  if (!omega.nonnegative()) fail(Err::InvalidQuery, "limit requires omega >= 0");
  const int top = w.top();
  if (i >= top) fail(Err::LevelExceeded, "start state above the window top");
  if (omega.level() < top) fail(Err::LevelExceeded, "weight shorter than window top");

  PotentialTable tab(m, omega, top);
  LimitDiagnostic d;
  for (int lvl : w.schedule) {
    if (lvl <= i) continue;
    double wa = tab.w(a, lvl);
    if (wa == 0.0) fail(Err::NumericalUnderflow, "W(a,N) underflowed along the schedule");
    d.levels.push_back(lvl);
    d.w_ratio.push_back(tab.w(i, lvl) / wa);
    double za = tab.z(a, lvl);
    d.z_ratio.push_back(za == 0.0 ? 0.0 : tab.z(i, lvl) / za);
  }
  if (d.w_ratio.empty()) fail(Err::InvalidQuery, "schedule has no levels above the start state");
  d.value = d.w_ratio.back();

  Verdict vw = judge_limit(d.w_ratio, w.tol);
  Verdict vz = judge_limit(d.z_ratio, w.tol);
  bool agree = std::abs(d.w_ratio.back() - d.z_ratio.back()) <
               w.tol * (1.0 + std::abs(d.w_ratio.back()));
  d.verdict = (vw == Verdict::Converged && vz == Verdict::Converged && agree)
                  ? Verdict::Converged
                  : (vw == Verdict::Diverging ? Verdict::Diverging : Verdict::Undetermined);

  // closed form Z(i,inf)/Z(a,inf) when the hypothesis series converges
  PotentialTable plain(m, WeightFunction::zero(top), top);
  SeriesDiagnostic hyp = run_series("sum omega_u W(0,u)", w,
                                    [&](State u) { return omega.at(u) * plain.w(0, u); });
  if (hyp.verdict == Verdict::Converged) {
    CompensatedSum zi, za;
    zi.add(1.0);
    za.add(1.0);
    for (State u = i + 1; u <= top; ++u) zi.add(omega.at(u) * tab.w(i, u));
    for (State u = a + 1; u <= top; ++u) za.add(omega.at(u) * tab.w(a, u));
    if (za.value() > 0.0) d.closed_form = zi.value() / za.value();
  }
  return d;
}

namespace {

// Shared body for the absorbed Green function and the q-resolvent: the exact
// two-sided value W^(v)(0,y) W^(v)(x,N)/W^(v)(0,N) - W^(v)(x,y) is monotone in
// the barrier N; report its limit along the schedule, attach the Z(.,inf)
// closed form when the hypothesis series converge.
GreenValue green_limit(const SingleDeathModel& m, const WeightFunction& v, State x, State y,
                       const TruncationWindow& w, bool closed_form_ok) {
  const int top = w.top();
  PotentialTable tab(m, v, top);

  std::vector<double> vals;
  std::vector<int> levels;
  for (int lvl : w.schedule) {
    if (lvl <= std::max(x, y)) continue;
    double w0 = tab.w(0, lvl);
    if (w0 == 0.0) fail(Err::NumericalUnderflow, "W(0,N) underflowed along the schedule");
    levels.push_back(lvl);
    vals.push_back(tab.w(0, y) * tab.w(x, lvl) / w0 - tab.w(x, y));
  }
  if (vals.empty()) fail(Err::InvalidQuery, "schedule has no levels above x and y");

  GreenValue g;
  g.value = vals.back();
  g.verdict = judge_limit(vals, w.tol);
  if (vals.size() >= 2) g.tail_residual = std::abs(vals.back() - vals[vals.size() - 2]);

  if (closed_form_ok) {
    CompensatedSum zx, z0;
    zx.add(1.0);
    z0.add(1.0);
    for (State u = x + 1; u <= top; ++u) zx.add(v.at(u) * tab.w(x, u));
    for (State u = 1; u <= top; ++u) z0.add(v.at(u) * tab.w(0, u));
    if (z0.value() > 0.0) g.closed_form = tab.w(0, y) * zx.value() / z0.value() - tab.w(x, y);
  }

  if (g.verdict != Verdict::Converged && !g.closed_form)
    fail(Err::HypothesisNotEstablished,
         "neither the barrier limit stabilized nor the closed-form hypotheses hold");
  return g;
}

}  // namespace

GreenValue green_absorbed(const SingleDeathModel& m, State x, State y, const TruncationWindow& w) {
  if (!(x >= 1 && y >= 1)) fail(Err::InvalidQuery, "green_absorbed requires x, y >= 1");
  RegimeDiagnostic reg = killing_regime(m, w);
  if (reg.C.verdict != Verdict::Converged)
    fail(Err::SmallKillingNotEstablished,
         "small-killing series verdict: " + std::string(verdict_name(reg.C.verdict)));
  WeightFunction v = WeightFunction::zero(w.top()).plus_killing(m);
  return green_limit(m, v, x, y, w, /*closed_form_ok=*/true);
}

GreenValue resolvent_green(const SingleDeathModel& m, double q, State i, State j,
                           const TruncationWindow& w) {
  if (!(q > 0.0)) fail(Err::InvalidQuery, "resolvent requires q > 0");
  if (!(i >= 1 && j >= 1)) fail(Err::InvalidQuery, "resolvent requires i, j >= 1");
  RegimeDiagnostic reg = killing_regime(m, w);
  bool hyp = reg.C.verdict == Verdict::Converged && reg.S.verdict == Verdict::Converged;
  WeightFunction v = WeightFunction::constant(q, w.top()).plus_killing(m);
  return green_limit(m, v, i, j, w, /*closed_form_ok=*/hyp);
}

}  // namespace sdq::exitlaws

#pragma once

#include <memory>
#include <optional>

#include "sdq/model.hpp"
#include "sdq/potential.hpp"
#include "sdq/window.hpp"

namespace sdq::exitlaws {

// Two-sided exit functionals on the strip (a, N).  with_killing = true
// evaluates the killed process X (effective weight omega + c), false the
// non-killing process Y (weight omega).  One table per solver; queries are
// pure and cheap.
class ExitSolver {
 public:
  ExitSolver(const SingleDeathModel& m, const WeightFunction& omega, State upper,
             bool with_killing = true);

  // E_i[exp(-int_0^{T_a} omega(X_t) dt); T_a < T_{N+} ^ T_partial]
  double downcross_laplace(State a, State i) const;

  // E_i[int_0^{T_a ^ T_{N+} ^ T_partial} e^{-int omega} 1_{X_t = j} dt]
  double occupation_transform(State a, State i, State j) const;

  // E_i[exp(-int_0^{T_{N+} ^ T_partial} omega(X_t) dt); T_{N+} ^ T_partial < T_a]
  double upcross_laplace(State a, State i) const;

  State upper() const { return upper_; }
  const PotentialTable& table() const { return *table_; }

 private:
  const SingleDeathModel* model_;
  WeightFunction omega_;  // the bare omega (enters the upcross sums)
  State upper_;
  bool with_killing_;
  std::unique_ptr<PotentialTable> table_;  // built for the effective weight
  double ratio(State a, State i) const;    // W(i,N)/W(a,N) with underflow guard
};

// One-sided limit E_i[exp(-int_0^{T_a} omega(Y_t) dt)] for the non-killing
// process: W- and Z-ratios along the schedule, verdict Converged when both
// stabilize and agree; closed form Z(i,inf)/Z(a,inf) attached when
// sum omega_u W(0,u) converges.
struct LimitDiagnostic {
  std::vector<int> levels;
  std::vector<double> w_ratio;
  std::vector<double> z_ratio;
  Verdict verdict = Verdict::Undetermined;
  double value = 0.0;  // last W-ratio
  std::optional<double> closed_form;
};

LimitDiagnostic hit_laplace_limit(const SingleDeathModel& m, const WeightFunction& omega, State a,
                                  State i, const TruncationWindow& w);

// Green-type values reported with the limit verdict and a tail residual.
struct GreenValue {
  double value = 0.0;
  double tail_residual = 0.0;
  Verdict verdict = Verdict::Undetermined;
  std::optional<double> closed_form;  // Z(.,inf) route, when hypotheses hold
};

// G^0(x,y): expected time at y before T_0 ^ T_partial, started from x.
GreenValue green_absorbed(const SingleDeathModel& m, State x, State y, const TruncationWindow& w);

// q-resolvent: E_i[int_0^{T_0 ^ T_partial} e^{-qt} 1_{X_t=j} dt].
GreenValue resolvent_green(const SingleDeathModel& m, double q, State i, State j,
                           const TruncationWindow& w);

}  // namespace sdq::exitlaws

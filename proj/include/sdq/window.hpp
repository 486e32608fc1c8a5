#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sdq/util.hpp"

namespace sdq {

// Truncation policy for everything that approximates an infinite sum or an
// N -> infinity limit: a top level, a relative tolerance for the operational
// convergence test, and an increasing schedule of levels at which partial
// results are recorded.
struct TruncationWindow {
  int n_max = 400;
  double tol = 1e-2;
  std::vector<int> schedule;

  static TruncationWindow make(int n_max, double tol = 1e-2);
  int top() const { return schedule.empty() ? n_max : schedule.back(); }
};

enum class Verdict { Converged, Diverging, Undetermined };

const char* verdict_name(Verdict v);

// Partial sums of a series along the window schedule together with the
// operational verdict:
//   Converged  - the last two schedule extensions each changed the sum by
//                less than tol*(1+|sum|)
//   Diverging  - |sum| exceeded 1/tol, or the extension increments are
//                non-decreasing over the last half of the schedule (and the
//                last one is materially nonzero)
//   Undetermined otherwise.
struct SeriesDiagnostic {
  std::string label;
  std::vector<int> levels;
  std::vector<double> partial;
  Verdict verdict = Verdict::Undetermined;
  std::optional<double> tail_estimate;  // geometric extrapolation, estimate only

  double value() const { return partial.empty() ? 0.0 : partial.back(); }
};

Verdict judge_series(const std::vector<double>& partial, double tol);

// Stabilisation test for a sequence of ratio/limit values (no divergence
// semantics: limits of ratios do not "diverge" by growth of increments).
Verdict judge_limit(const std::vector<double>& values, double tol);

// Estimate of the remaining tail of a series from the decay of its last
// schedule increments; nullopt when the increments do not look geometric.
std::optional<double> geometric_tail_estimate(const std::vector<int>& levels,
                                              const std::vector<double>& partial);

// Convenience: run `term(u)` over u = 1..top, recording partial sums at each
// schedule level, judging and attaching a tail estimate.
template <typename TermFn>
SeriesDiagnostic run_series(const std::string& label, const TruncationWindow& w, TermFn term) {
  SeriesDiagnostic d;
  d.label = label;
  CompensatedSum acc;
  std::size_t next = 0;
  for (int u = 1; u <= w.top(); ++u) {
    acc.add(term(u));
    while (next < w.schedule.size() && w.schedule[next] == u) {
      d.levels.push_back(u);
      d.partial.push_back(acc.value());
      ++next;
    }
  }
  d.verdict = judge_series(d.partial, w.tol);
  if (d.verdict == Verdict::Converged)
    d.tail_estimate = geometric_tail_estimate(d.levels, d.partial);
  return d;
}

}  // namespace sdq

#include "sdq/window.hpp"

#include <algorithm>
#include <cmath>

#include "sdq/errors.hpp"

namespace sdq {

TruncationWindow TruncationWindow::make(int n_max, double tol) {
  if (n_max < 2) fail(Err::InvalidArgument, "window n_max must be >= 2");
  if (!(tol > 0)) fail(Err::InvalidArgument, "window tol must be > 0");
  TruncationWindow w;
  w.n_max = n_max;
  w.tol = tol;
  // doubling schedule ending exactly at n_max, at least four levels when room
  int lo = std::max(4, n_max / 16);
  std::vector<int> rev;
  int lvl = n_max;
  while (lvl > lo) {
    rev.push_back(lvl);
    lvl = (lvl + 1) / 2;
  }
  rev.push_back(lvl);
  w.schedule.assign(rev.rbegin(), rev.rend());
  return w;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "Converged";
    case Verdict::Diverging: return "Diverging";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "?";
}

Verdict judge_series(const std::vector<double>& partial, double tol) {
  const std::size_t k = partial.size();
  if (k < 3) return Verdict::Undetermined;

  auto small_change = [&](std::size_t idx) {
    return std::abs(partial[idx] - partial[idx - 1]) < tol * (1.0 + std::abs(partial[idx]));
  };
  if (small_change(k - 1) && small_change(k - 2)) return Verdict::Converged;

  if (std::abs(partial.back()) > 1.0 / tol) return Verdict::Diverging;

  // extension increments, last half non-decreasing and materially nonzero
  std::vector<double> inc;
  for (std::size_t i = 1; i < k; ++i) inc.push_back(partial[i] - partial[i - 1]);
  std::size_t half = inc.size() / 2;
  bool nondec = inc.size() - half >= 2;
  for (std::size_t i = half + 1; i < inc.size() && nondec; ++i)
    if (inc[i] < inc[i - 1] * (1.0 - 1e-12) - 1e-300) nondec = false;
  if (nondec && inc.back() > tol * (1.0 + std::abs(partial.back())))
    return Verdict::Diverging;

  return Verdict::Undetermined;
}

Verdict judge_limit(const std::vector<double>& values, double tol) {
  const std::size_t k = values.size();
  if (k < 3) return Verdict::Undetermined;
  auto stable = [&](std::size_t idx) {
    return std::abs(values[idx] - values[idx - 1]) < tol * (1.0 + std::abs(values[idx]));
  };
  if (stable(k - 1) && stable(k - 2)) return Verdict::Converged;
  if (!std::isfinite(values.back()) || std::abs(values.back()) > 1.0 / tol)
    return Verdict::Diverging;
  return Verdict::Undetermined;
}

std::optional<double> geometric_tail_estimate(const std::vector<int>& levels,
                                              const std::vector<double>& partial) {
  const std::size_t k = partial.size();
  if (k < 3 || levels.size() != k) return std::nullopt;
  double d1 = partial[k - 1] - partial[k - 2];
  double d0 = partial[k - 2] - partial[k - 3];
  double a1 = std::abs(d1), a0 = std::abs(d0);
  if (a1 == 0.0) return 0.0;
  if (a0 == 0.0 || a1 >= a0) return std::nullopt;
  // per-extension decay ratio; tail ~ geometric series of further extensions
  double r = a1 / a0;
  return a1 * r / (1.0 - r);
}

}  // namespace sdq

#include "sdq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "sdq/util.hpp"

namespace sdq::sim {

const char* absorption_name(Absorption a) {
  switch (a) {
    case Absorption::HitZero: return "HitZero";
    case Absorption::Killed: return "Killed";
    case Absorption::Censored: return "Censored";
  }
  return "?";
}

namespace {

// Walks one path and reports each holding interval to `on_step(state, dt)`;
// returns the trajectory tail data without storing steps.  sample_path and the
// estimators share this single construction.
struct PathEnd {
  Absorption absorption;
  State final_state;
  double total_time;
  double hazard;
};

template <typename StepFn>
PathEnd walk_path(const SingleDeathModel& m, State x0, SplitMix64& rng, const Caps& caps,
                  StepFn on_step) {
  if (x0 < 1) fail(Err::InvalidQuery, "paths start from x0 >= 1");
  State s = x0;
  double t = 0.0;
  double hazard = 0.0;
  const double clock = rng.exponential();  // one unit exponential per path

  for (;;) {
    double qy = m.motion_rate(s);
    double hold = rng.exponential() / qy;
    double c = m.killing(s);

    if (c > 0.0 && hazard + c * hold >= clock) {
      double dt = (clock - hazard) / c;  // exact crossing inside the interval
      if (t + dt > caps.t_max) {
        on_step(s, caps.t_max - t);
        return {Absorption::Censored, s, caps.t_max, hazard + c * (caps.t_max - t)};
      }
      on_step(s, dt);
      return {Absorption::Killed, s, t + dt, clock};
    }
    if (t + hold > caps.t_max) {
      on_step(s, caps.t_max - t);
      return {Absorption::Censored, s, caps.t_max, hazard + c * (caps.t_max - t)};
    }

    on_step(s, hold);
    t += hold;
    hazard += c * hold;

    double u = rng.uniform() * qy;
    if (u < m.down(s)) {
      --s;
      if (s == 0) return {Absorption::HitZero, 0, t, hazard};
    } else {
      s = m.up().sample_target(s, (u - m.down(s)) / m.up_total(s));
      if (s > caps.level_max) return {Absorption::Censored, s, t, hazard};
    }
  }
}

// deterministic parallel fold: paths are chunked by index, chunk results are
// merged in index order, and each path draws from its own counter-based stream
template <typename Acc, typename PerPath>
Acc parallel_paths(long n_paths, std::uint64_t seed, PerPath per_path,
                   void (*merge)(Acc&, const Acc&)) {
  unsigned hw = std::thread::hardware_concurrency();
  long workers = std::clamp<long>(static_cast<long>(hw), 1, 8);
  if (n_paths < 4096) workers = 1;
  const long chunk = (n_paths + workers - 1) / workers;

  std::vector<std::future<Acc>> futs;
  for (long w = 0; w < workers; ++w) {
    long lo = w * chunk, hi = std::min(n_paths, lo + chunk);
    if (lo >= hi) break;
    futs.push_back(std::async(std::launch::async, [=]() {
      Acc acc{};
      for (long p = lo; p < hi; ++p) {
        SplitMix64 rng(seed, static_cast<std::uint64_t>(p));
        per_path(acc, rng, p);
      }
      return acc;
    }));
  }
  Acc total{};
  for (auto& f : futs) {
    Acc part = f.get();
    merge(total, part);
  }
  return total;
}

}  // namespace

Trajectory sample_path(const SingleDeathModel& m, State x0, std::uint64_t seed,
                       std::uint64_t path_index, const Caps& caps) {
  Trajectory tr;
  SplitMix64 rng(seed, path_index);
  PathEnd end = walk_path(m, x0, rng, caps,
                          [&](State s, double dt) { tr.steps.emplace_back(s, dt); });
  tr.absorption = end.absorption;
  tr.final_state = end.final_state;
  tr.total_time = end.total_time;
  tr.hazard_at_end = end.hazard;
  return tr;
}

bool path_is_legal(const SingleDeathModel& m, State x0, const Trajectory& t) {
  State prev = x0;
  bool first = true;
  for (auto& [s, dt] : t.steps) {
    if (dt <= 0.0) return false;
    if (first) {
      if (s != x0) return false;
      first = false;
    } else {
      if (!(s == prev - 1 || s > prev)) return false;  // down steps of exactly one
    }
    prev = s;
  }
  if (t.absorption == Absorption::HitZero && t.final_state != 0) return false;
  if (t.absorption == Absorption::Killed && m.killing(t.final_state) <= 0.0) return false;
  return true;
}

// ---------------------------------------------------------------------------
// estimators
// ---------------------------------------------------------------------------

namespace {
struct Tally {
  long hits = 0, killed = 0, censored = 0;
  double sum = 0.0, sumsq = 0.0;
};
void merge_tally(Tally& a, const Tally& b) {
  a.hits += b.hits;
  a.killed += b.killed;
  a.censored += b.censored;
  a.sum += b.sum;
  a.sumsq += b.sumsq;
}
}  // namespace

EstimateWithError estimate_hitting_prob(const SingleDeathModel& m, State x0, long n_paths,
                                        std::uint64_t seed, const Caps& caps,
                                        double max_censored) {
  if (n_paths < 1) fail(Err::InvalidArgument, "need at least one path");
  Tally t = parallel_paths<Tally>(
      n_paths, seed,
      [&](Tally& acc, SplitMix64& rng, long) {
        PathEnd e = walk_path(m, x0, rng, caps, [](State, double) {});
        if (e.absorption == Absorption::HitZero) ++acc.hits;
        else if (e.absorption == Absorption::Killed) ++acc.killed;
        else ++acc.censored;
      },
      merge_tally);

  double cfrac = double(t.censored) / double(n_paths);
  if (cfrac > max_censored)
    fail(Err::TooManyCensored, "censored fraction " + std::to_string(cfrac) +
                                   " exceeds the budget " + std::to_string(max_censored));
  long n = t.hits + t.killed;
  if (n == 0) fail(Err::NoSurvivors, "no uncensored paths");
  double p = double(t.hits) / double(n);
  EstimateWithError out;
  out.estimate = p;
  out.std_error = std::sqrt(std::max(0.0, p * (1.0 - p)) / double(n));
  out.n_paths = n;
  out.seed = seed;
  out.censored_fraction = cfrac;
  return out;
}

EstimateWithError estimate_occupation(const SingleDeathModel& m, State x0, State y, long n_paths,
                                      std::uint64_t seed, const Caps& caps, double max_censored) {
  if (n_paths < 1) fail(Err::InvalidArgument, "need at least one path");
  Tally t = parallel_paths<Tally>(
      n_paths, seed,
      [&](Tally& acc, SplitMix64& rng, long) {
        double occ = 0.0;
        PathEnd e = walk_path(m, x0, rng, caps, [&](State s, double dt) {
          if (s == y) occ += dt;
        });
        if (e.absorption == Absorption::Censored) {
          ++acc.censored;
        } else {
          acc.sum += occ;
          acc.sumsq += occ * occ;
          ++acc.hits;
        }
      },
      merge_tally);

  double cfrac = double(t.censored) / double(n_paths);
  if (cfrac > max_censored)
    fail(Err::TooManyCensored, "censored fraction exceeds the budget");
  long n = t.hits;
  if (n == 0) fail(Err::NoSurvivors, "no uncensored paths");
  double mean = t.sum / double(n);
  double var = std::max(0.0, t.sumsq / double(n) - mean * mean);
  EstimateWithError out;
  out.estimate = mean;
  out.std_error = std::sqrt(var / double(n));
  out.n_paths = n;
  out.seed = seed;
  out.censored_fraction = cfrac;
  return out;
}

EstimateWithError estimate_downcross(const SingleDeathModel& m, const WeightFunction& omega,
                                     State a, State i, State upper, long n_paths,
                                     std::uint64_t seed, const Caps& caps) {
  if (!(0 <= a && a < i && i < upper)) fail(Err::InvalidQuery, "requires a < i < upper");
  Tally t = parallel_paths<Tally>(
      n_paths, seed,
      [&](Tally& acc, SplitMix64& rng, long) {
        // walk until hitting a (weight e^{-int omega}), crossing >= upper, or killed
        double integral = 0.0;
        State s = i;
        double hazard = 0.0;
        const double clock = rng.exponential();
        double x = 0.0;  // outcome weight
        for (;;) {
          double qy = m.motion_rate(s);
          double hold = rng.exponential() / qy;
          double c = m.killing(s);
          if (c > 0.0 && hazard + c * hold >= clock) break;  // killed first: weight 0
          integral += omega.at(s) * hold;
          hazard += c * hold;
          double u = rng.uniform() * qy;
          if (u < m.down(s)) {
            --s;
            if (s == a) {
              x = std::exp(-integral);
              break;
            }
          } else {
            s = m.up().sample_target(s, (u - m.down(s)) / m.up_total(s));
            if (s >= upper) break;  // upcross: weight 0
          }
        }
        acc.sum += x;
        acc.sumsq += x * x;
        ++acc.hits;
      },
      merge_tally);
  (void)caps;

  double mean = t.sum / double(n_paths);
  double var = std::max(0.0, t.sumsq / double(n_paths) - mean * mean);
  EstimateWithError out;
  out.estimate = mean;
  out.std_error = std::sqrt(var / double(n_paths));
  out.n_paths = n_paths;
  out.seed = seed;
  return out;
}

// ---------------------------------------------------------------------------
// conditional laws and convergence curves
// ---------------------------------------------------------------------------

Distribution Distribution::point_mass(State i, int n) {
  if (!(1 <= i && i <= n)) fail(Err::InvalidArgument, "point mass outside 1..n");
  Distribution d;
  d.p.assign(static_cast<std::size_t>(n), 0.0);
  d.p[static_cast<std::size_t>(i) - 1] = 1.0;
  return d;
}

Distribution Distribution::from_qsd(const qsd::QsdResult& nu) {
  Distribution d;
  d.p = nu.probs;
  d.tail = nu.tail_mass;
  return d;
}

double tv_distance(const Distribution& a, const Distribution& b) {
  CompensatedSum s;
  std::size_t n = std::max(a.p.size(), b.p.size());
  for (std::size_t i = 0; i < n; ++i) {
    double pa = i < a.p.size() ? a.p[i] : 0.0;
    double pb = i < b.p.size() ? b.p[i] : 0.0;
    s.add(std::abs(pa - pb));
  }
  s.add(a.tail);  // tail masses count as pure discrepancy
  s.add(b.tail);
  return 0.5 * s.value();
}

namespace {

State sample_initial(const Distribution& mu0, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu0.p.size(); ++i) {
    acc += mu0.p[i];
    if (u < acc) return static_cast<State>(i) + 1;
  }
  return static_cast<State>(mu0.p.size());
}

struct LawAcc {
  std::vector<std::vector<long>> counts;  // per grid time, per state bucket
  std::vector<long> beyond;               // state above the bucket range
  std::vector<long> survivors;
  long censored = 0;
};

void merge_law(LawAcc& a, const LawAcc& b) {
  if (a.counts.empty()) {
    a = b;
    return;
  }
  for (std::size_t t = 0; t < a.counts.size(); ++t) {
    for (std::size_t s = 0; s < a.counts[t].size(); ++s) a.counts[t][s] += b.counts[t][s];
    a.beyond[t] += b.beyond[t];
    a.survivors[t] += b.survivors[t];
  }
  a.censored += b.censored;
}

// evaluate the state of one path at every grid time in one pass
template <typename Visitor>
void walk_grid(const SingleDeathModel& m, State x0, SplitMix64& rng,
               const std::vector<double>& grid, const Caps& caps, Visitor visit,
               long& censored) {
  State s = x0;
  double t = 0.0;
  double hazard = 0.0;
  const double clock = rng.exponential();
  std::size_t g = 0;

  auto flush_until = [&](double tend, State state_now, bool alive) {
    while (g < grid.size() && grid[g] < tend) {
      visit(g, state_now, alive);
      ++g;
    }
  };

  for (;;) {
    double qy = m.motion_rate(s);
    double hold = rng.exponential() / qy;
    double c = m.killing(s);

    double t_kill = (c > 0.0 && hazard + c * hold >= clock) ? t + (clock - hazard) / c
                                                            : std::numeric_limits<double>::infinity();
    double t_next = t + hold;

    if (t_kill <= t_next) {
      flush_until(t_kill, s, true);
      flush_until(std::numeric_limits<double>::infinity(), s, false);  // dead afterwards
      return;
    }
    if (t_next > caps.t_max) {
      flush_until(caps.t_max, s, true);
      if (g < grid.size()) ++censored;
      // grid points past the cap are neither survivors nor dead: censored
      return;
    }

    flush_until(t_next, s, true);
    t = t_next;
    hazard += c * hold;

    double u = rng.uniform() * qy;
    if (u < m.down(s)) {
      --s;
      if (s == 0) {
        flush_until(std::numeric_limits<double>::infinity(), 0, false);
        return;
      }
    } else {
      s = m.up().sample_target(s, (u - m.down(s)) / m.up_total(s));
      if (s > caps.level_max) {
        if (g < grid.size()) ++censored;
        return;
      }
    }
    if (g >= grid.size()) return;
  }
}

LawAcc law_at_grid(const SingleDeathModel& m, const Distribution& mu0,
                   const std::vector<double>& grid, long n_paths, std::uint64_t seed,
                   const Caps& caps, int n_buckets) {
  return parallel_paths<LawAcc>(
      n_paths, seed,
      [&](LawAcc& acc, SplitMix64& rng, long) {
        if (acc.counts.empty()) {
          acc.counts.assign(grid.size(), std::vector<long>(static_cast<std::size_t>(n_buckets), 0));
          acc.beyond.assign(grid.size(), 0);
          acc.survivors.assign(grid.size(), 0);
        }
        State x0 = sample_initial(mu0, rng.uniform());
        walk_grid(
            m, x0, rng, grid, caps,
            [&](std::size_t g, State s, bool alive) {
              if (!alive) return;
              ++acc.survivors[g];
              if (s >= 1 && s <= n_buckets) ++acc.counts[g][static_cast<std::size_t>(s) - 1];
              else ++acc.beyond[g];
            },
            acc.censored);
      },
      merge_law);
}

}  // namespace

LawEstimate conditional_law(const SingleDeathModel& m, const Distribution& mu0, double t,
                            long n_paths, std::uint64_t seed, const Caps& caps) {
  if (t < 0.0) fail(Err::InvalidQuery, "time must be >= 0");
  if (t == 0.0) {
    LawEstimate le;
    le.law = mu0;
    le.survivors = n_paths;
    return le;
  }
  int buckets = std::max<int>(64, static_cast<int>(mu0.p.size()) * 4);
  LawAcc acc = law_at_grid(m, mu0, {t}, n_paths, seed, caps, buckets);
  long surv = acc.survivors[0];
  if (surv == 0) fail(Err::NoSurvivors, "no surviving paths at the requested time");
  LawEstimate le;
  le.survivors = surv;
  le.censored = acc.censored;
  le.law.p.resize(acc.counts[0].size());
  for (std::size_t i = 0; i < le.law.p.size(); ++i)
    le.law.p[i] = double(acc.counts[0][i]) / double(surv);
  le.law.tail = double(acc.beyond[0]) / double(surv);
  return le;
}

namespace {
double tv_noise_floor(const Distribution& nu, long n) {
  if (n <= 0) return 1.0;
  // E||p_hat - p||_1 ~ sum_j sqrt(2 p_j (1-p_j) / (pi n)); TV is half of it
  double s = 0.0;
  for (double p : nu.p) s += std::sqrt(std::max(0.0, p * (1.0 - p)) / (2.0 * M_PI * n));
  return s;
}
}  // namespace

ConvergenceCurve convergence_curve(const SingleDeathModel& m, const Distribution& mu0,
                                   const std::vector<double>& t_grid, long n_paths,
                                   std::uint64_t seed, const Caps& caps,
                                   const Distribution& nu) {
  if (t_grid.empty()) fail(Err::InvalidArgument, "empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1]) fail(Err::InvalidArgument, "time grid must increase");

  int buckets = static_cast<int>(std::max<std::size_t>(nu.p.size(), 64));
  LawAcc acc = law_at_grid(m, mu0, t_grid, n_paths, seed, caps, buckets);

  ConvergenceCurve out;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    CurvePoint pt;
    pt.t = t_grid[g];
    pt.survivors = acc.survivors[g];
    if (pt.survivors > 0) {
      Distribution emp;
      emp.p.resize(acc.counts[g].size());
      for (std::size_t i = 0; i < emp.p.size(); ++i)
        emp.p[i] = double(acc.counts[g][i]) / double(pt.survivors);
      emp.tail = double(acc.beyond[g]) / double(pt.survivors);
      pt.tv = tv_distance(emp, nu);
      pt.noise_floor = tv_noise_floor(nu, pt.survivors);
    } else {
      pt.tv = 1.0;
      pt.noise_floor = 1.0;
    }
    out.points.push_back(pt);
  }

  // fit log TV ~ -gamma t over the second half of the grid, skipping points
  // already at the sampling noise floor or without survivors
  std::vector<double> xs, ys;
  std::size_t start = t_grid.size() / 2;
  // widen backwards while the early points still sit clearly above the floor
  while (start > 0 && out.points[start - 1].tv > 3.0 * out.points[start - 1].noise_floor)
    --start;
  for (std::size_t g = start; g < out.points.size(); ++g) {
    const CurvePoint& pt = out.points[g];
    if (pt.survivors == 0 || pt.tv <= 0.0) continue;
    if (pt.tv < 2.0 * pt.noise_floor) continue;
    xs.push_back(pt.t);
    ys.push_back(std::log(pt.tv));
    out.fit_indices.push_back(static_cast<int>(g));
  }
  if (xs.size() >= 3) {
    double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sx += xs[k];
      sy += ys[k];
      sxx += xs[k] * xs[k];
      sxy += xs[k] * ys[k];
    }
    double denom = n * sxx - sx * sx;
    if (denom > 0) {
      double slope = (n * sxy - sx * sy) / denom;
      double intercept = (sy - slope * sx) / n;
      double ss = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        double r = ys[k] - (intercept + slope * xs[k]);
        ss += r * r;
      }
      double dof = n - 2;
      double se = dof > 0 ? std::sqrt(ss / dof / (sxx - sx * sx / n)) : 0.0;
      out.fitted = true;
      out.gamma_hat = -slope;
      out.gamma_se = se;
      out.gamma_lcb95 = out.gamma_hat - 1.96 * se;
    }
  }
  return out;
}

}  // namespace sdq::sim

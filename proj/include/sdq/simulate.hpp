#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sdq/model.hpp"
#include "sdq/potential.hpp"
#include "sdq/qsd.hpp"

namespace sdq::sim {

struct Caps {
  double t_max = 1e9;
  State level_max = 100000;
};

enum class Absorption { HitZero, Killed, Censored };
const char* absorption_name(Absorption a);

// One killed-chain path: the motion follows the non-killing process, a unit
// exponential clock is compared against the accumulated hazard integral, and
// the crossing instant is located exactly inside the holding interval where
// it happens (the hazard is constant there).
struct Trajectory {
  std::vector<std::pair<State, double>> steps;  // (state, holding time)
  Absorption absorption = Absorption::Censored;
  State final_state = 0;       // state after the last transition (0, the killed
                               // state, or the state where censoring struck)
  double total_time = 0.0;
  double hazard_at_end = 0.0;  // integral of c along the path at termination
};

Trajectory sample_path(const SingleDeathModel& m, State x0, std::uint64_t seed,
                       std::uint64_t path_index, const Caps& caps);

// structural invariant check used by tests and by debug assertions
bool path_is_legal(const SingleDeathModel& m, State x0, const Trajectory& t);

struct EstimateWithError {
  double estimate = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  std::uint64_t seed = 0;
  double censored_fraction = 0.0;
};

EstimateWithError estimate_hitting_prob(const SingleDeathModel& m, State x0, long n_paths,
                                        std::uint64_t seed, const Caps& caps,
                                        double max_censored = 0.01);

// mean time spent at state y before absorption (cross-check for the Green
// function); censored paths beyond the budget raise TooManyCensored
EstimateWithError estimate_occupation(const SingleDeathModel& m, State x0, State y, long n_paths,
                                      std::uint64_t seed, const Caps& caps,
                                      double max_censored = 0.01);

// sample mean of exp(-int omega) on {T_a before T_{upper+} and killing};
// cross-check for the two-sided downcross transform
EstimateWithError estimate_downcross(const SingleDeathModel& m, const WeightFunction& omega,
                                     State a, State i, State upper, long n_paths,
                                     std::uint64_t seed, const Caps& caps);

// finite distribution on 1..N plus explicit tail mass
struct Distribution {
  std::vector<double> p;
  double tail = 0.0;
  static Distribution point_mass(State i, int n);
  static Distribution from_qsd(const qsd::QsdResult& nu);
};

double tv_distance(const Distribution& a, const Distribution& b);

struct LawEstimate {
  Distribution law;
  long survivors = 0;
  long censored = 0;
};

// empirical law of X_t among paths alive at t (t < T_0 ^ T_partial)
LawEstimate conditional_law(const SingleDeathModel& m, const Distribution& mu0, double t,
                            long n_paths, std::uint64_t seed, const Caps& caps);

struct CurvePoint {
  double t = 0.0;
  double tv = 0.0;
  long survivors = 0;
  double noise_floor = 0.0;  // expected TV of the empirical law at this sample size
};

struct ConvergenceCurve {
  std::vector<CurvePoint> points;
  bool fitted = false;
  double gamma_hat = 0.0;
  double gamma_se = 0.0;
  double gamma_lcb95 = 0.0;   // 95% lower confidence bound for the decay rate
  std::vector<int> fit_indices;
};

ConvergenceCurve convergence_curve(const SingleDeathModel& m, const Distribution& mu0,
                                   const std::vector<double>& t_grid, long n_paths,
                                   std::uint64_t seed, const Caps& caps,
                                   const Distribution& nu);

}  // namespace sdq::sim

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sdq/model.hpp"
#include "sdq/potential.hpp"
#include "sdq/window.hpp"

namespace sdq::qsd {

enum class Process { X, Y };

// Per-level principal decay rates of the truncation-killed restriction; the
// truncation boundary acts as extra killing so the estimates approach the
// decay parameter from above, non-increasing in the level.
struct DecayEstimate {
  Process which = Process::X;
  std::vector<int> levels;
  std::vector<double> per_level;
  double lambda0 = 0.0;      // last-level value
  double drift = 0.0;        // |last - previous| across levels
  bool monotone_nonincreasing = true;
  bool degenerate_flagged = false;
  // lambda0 ~ 0 rule: last level fell below 10x the observed drift
  bool near_zero() const { return lambda0 < 10.0 * drift; }
};

DecayEstimate decay_parameter(const SingleDeathModel& m, const TruncationWindow& w,
                              Process which = Process::X);

struct QsdResult {
  double theta = 0.0;
  Process which = Process::X;
  std::vector<double> probs;  // states 1..N (window top)
  double tail_mass = 0.0;     // estimated mass beyond the window
  double residual = -1.0;     // stationarity defect, filled by stationarity_residual
  double normalization_defect = 0.0;  // Y route: |1 - theta * total raw mass|
  long negative_entries = 0;          // sub-tolerance negatives that were zeroed
  std::string family_tag = "candidate";  // unique | continuum-member | candidate
};

QsdResult qsd_candidate(const SingleDeathModel& m, double theta, const TruncationWindow& w,
                        Process which = Process::X,
                        const std::optional<DecayEstimate>& decay = std::nullopt);

// max_j |sum_i nu_i q_ij + theta nu_j| / max(nu_j, floor) over interior rows
double stationarity_residual(const SingleDeathModel& m, const QsdResult& nu,
                             const TruncationWindow& w);

// Doob h-transform: q̄_ij = q_ij h(j)/h(i), conservative, 0 stays absorbing.
struct DoobModel {
  SingleDeathModel model;             // transformed rates as explicit lists on 1..L
  std::vector<double> h;              // the harmonic function used, indices 0..L
  std::vector<double> row_residual;   // |sum_offdiag q̄_ij - q_i| per state 1..L
  int level = 0;
};

DoobModel doob_transform(const SingleDeathModel& m, const TruncationWindow& w);

// Right side of the transformed-coefficient identity: evaluates
// q_{N,N-1} Z^(c)(N-1,inf) [ W^(q+c)(k-1,N)/Z^(c)(k-1,inf)
//                           - W^(q+c)(k,N)/Z^(c)(k,inf) ].
double doob_g_closed_form(const SingleDeathModel& m, double q, State k, State N,
                          const TruncationWindow& w);

enum class Regime { NoQSD, Continuum, Unique, UniqueUniform, UniqueLargeKilling, Undetermined };
const char* regime_name(Regime r);

struct Classification {
  Regime regime = Regime::Undetermined;
  RegimeDiagnostic diag;
  DecayEstimate decay;
  std::string rationale;
  nlohmann::json evidence() const;
};

// Pure verdict function over precomputed diagnostics (unit-testable on
// synthetic inputs); verdicts are numerical evidence, never proofs.
Regime classify_from(const RegimeDiagnostic& diag, const DecayEstimate& decay,
                     std::string* rationale = nullptr);

Classification classify_regime(const SingleDeathModel& m, const TruncationWindow& w);

}  // namespace sdq::qsd

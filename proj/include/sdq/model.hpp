#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sdq/errors.hpp"
#include "sdq/window.hpp"

namespace sdq {

using State = int;

// -----------------------------------------------------------------------------
// Sequence: a scalar function on states i >= 1 described either by an explicit
// finite list or by a named rule with a closed form.  Rules evaluate at any
// index; lists are strict and refuse queries past their end.
// -----------------------------------------------------------------------------
class Sequence {
 public:
  enum class Kind { Zero, Constant, List, Geometric, Linear, Power, SingleSite };

  static Sequence zero();
  static Sequence constant(double v);
  static Sequence list(std::vector<double> values);      // values[i-1] = s_i
  static Sequence geometric(double base, double ratio);  // s_i = base * ratio^(i-1)
  static Sequence linear(double slope, double offset = 0.0);  // s_i = slope*i + offset
  static Sequence power(double coeff, double exponent);       // s_i = coeff * i^exponent
  static Sequence single_site(State site, double v);

  double at(State i) const;
  Kind kind() const { return kind_; }
  bool identically_zero() const;
  // true when the rule is bounded in i by construction (syntactic witness)
  bool bounded_rule() const;

  static Sequence parse(const nlohmann::json& spec, const std::string& what);
  nlohmann::json describe() const;

 private:
  Kind kind_ = Kind::Zero;
  std::vector<double> values_;
  double a_ = 0.0, b_ = 0.0;
  State site_ = 1;
};

// -----------------------------------------------------------------------------
// UpRates: the per-state description of {q_{ij} : j > i}.  Either a finite
// support list per state, or a rule with an analytic tail-sum accessor.
// -----------------------------------------------------------------------------
class UpRates {
 public:
  enum class Kind { None, PerStateList, SingleUp, GeometricTail };
  using Entry = std::pair<State, double>;  // (target j, rate)

  static UpRates none();
  static UpRates per_state_list(std::vector<std::vector<Entry>> rows);  // rows[i-1] for state i
  static UpRates single_up(Sequence rate);  // q_{i,i+1} = rate(i)
  // q_{i,i+k} = base(i) * ratio^(k-1), k >= 1, 0 < ratio < 1
  static UpRates geometric_tail(Sequence base, double ratio);

  Kind kind() const { return kind_; }
  bool finite_support() const { return kind_ != Kind::GeometricTail; }

  double total(State n) const;           // sum_{j>n} q_{nj}
  double tail(State n, State k) const;   // sum_{j>=k} q_{nj}, requires k > n
  double rate(State n, State j) const;   // q_{nj}, j > n
  // largest support target for state n; nullopt for infinite support
  std::optional<State> max_target(State n) const;

  // invoke fn(j, rate) for every support entry of state n with j <= hi
  void visit(State n, State hi, const std::function<void(State, double)>& fn) const;

  // inverse-CDF sample of the up-target given u in [0,1): P(j) = q_{nj}/total(n)
  State sample_target(State n, double u) const;

  static UpRates parse(const nlohmann::json& spec);
  nlohmann::json describe() const;

 private:
  Kind kind_ = Kind::None;
  std::vector<std::vector<Entry>> rows_;
  Sequence seq_;
  double ratio_ = 0.5;
};

// -----------------------------------------------------------------------------
// SingleDeathModel: rate matrix Q with q_{i,i-1} > 0, q_{i,i-k} = 0 for k >= 2,
// arbitrary upward rates, and killing c_i >= 0.  State 0 is absorbing.
// Immutable after validation; all accessors are pure.
// -----------------------------------------------------------------------------
class SingleDeathModel {
 public:
  // validating factory for parsed config (throws validation errors)
  static SingleDeathModel validate(const nlohmann::json& spec);
  static SingleDeathModel preset(const std::string& name);
  static std::vector<std::string> preset_names();

  // programmatic factory used for derived models (Doob transform, nonkilled);
  // checks structural invariants but allows c == 0
  static SingleDeathModel from_parts(Sequence down, UpRates up, Sequence killing, int n_max,
                                     bool allow_zero_killing);

  double down(State i) const;        // q_{i,i-1}, i >= 1
  double killing(State i) const;     // c_i
  double up_total(State i) const;    // sum_{j>i} q_{ij}
  double up_rate(State i, State j) const;
  double total_rate(State i) const;   // q_i = c_i + q_{i,i-1} + sum_{j>i} q_{ij}
  double motion_rate(State i) const;  // q_i^(Y) = q_{i,i-1} + sum_{j>i} q_{ij}

  // q_n^{(k)}(omega_n) = sum_{j>=k} q_{nj} + omega_n, for k > n >= 1
  double tail_rate(State n, State k, double omega_n) const;

  const UpRates& up() const { return up_; }
  const Sequence& down_seq() const { return down_; }
  const Sequence& killing_seq() const { return kill_; }
  int n_max() const { return n_max_; }
  const std::string& source_name() const { return name_; }

  bool killing_is_zero() const { return kill_.identically_zero(); }
  // identical off-diagonal rates, killing == 0, conservative rows
  SingleDeathModel nonkilled() const;

  nlohmann::json describe() const;

 private:
  SingleDeathModel() = default;
  Sequence down_, kill_;
  UpRates up_;
  int n_max_ = 400;
  std::string name_;
  void check_invariants(bool allow_zero_killing) const;
};

// -----------------------------------------------------------------------------
// Killing-regime diagnostics: partial sums of S = sum W(0,u),
// C = sum c_u W(0,u), and sum (1+c_u) W(0,u), plus the large-killing witness
// liminf c_n > inf_n q_n evaluated on the window.
// -----------------------------------------------------------------------------
struct RegimeDiagnostic {
  SeriesDiagnostic S;        // sum W(0,u)
  SeriesDiagnostic C;        // sum c_u W(0,u)
  SeriesDiagnostic CDFIBK;   // sum (1+c_u) W(0,u)  (coming down from infinity before killing)
  bool large_killing_flag = false;
  double liminf_c_proxy = 0.0;  // min of c over the last half of the window
  double inf_q = 0.0;           // min of total rate q_n over the window
  bool killing_bounded_witness = false;  // syntactic rule bound or window sup for lists
  double killing_sup_witness = 0.0;
};

RegimeDiagnostic killing_regime(const SingleDeathModel& m, const TruncationWindow& w);

}  // namespace sdq

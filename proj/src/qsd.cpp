#include "sdq/qsd.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "sdq/oracle.hpp"

namespace sdq::qsd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// decay parameter
// ---------------------------------------------------------------------------

DecayEstimate decay_parameter(const SingleDeathModel& m, const TruncationWindow& w,
                              Process which) {
  DecayEstimate d;
  d.which = which;
  const SingleDeathModel* target = &m;
  SingleDeathModel nk = m.nonkilled();
  if (which == Process::Y) target = &nk;

  for (int lvl : w.schedule) {
    if (lvl < 2) continue;
    oracle::EigenPair ep;
    try {
      ep = oracle::principal_eigenpair(*target, lvl);
    } catch (const Error& e) {
      if (e.code == Err::IterationDivergence)
        fail(Err::EigSolverFailure, std::string("decay_parameter: ") + e.what());
      throw;
    }
    d.levels.push_back(lvl);
    d.per_level.push_back(ep.rate);
    d.degenerate_flagged = d.degenerate_flagged || ep.degenerate;
  }
  if (d.per_level.empty()) fail(Err::InvalidArgument, "empty schedule");
  d.lambda0 = d.per_level.back();
  d.drift = d.per_level.size() >= 2
                ? std::abs(d.per_level.back() - d.per_level[d.per_level.size() - 2])
                : 0.0;
  for (std::size_t k = 1; k < d.per_level.size(); ++k)
    if (d.per_level[k] > d.per_level[k - 1] + 1e-9 * std::max(1.0, d.per_level[k]))
      d.monotone_nonincreasing = false;
  return d;
}

// ---------------------------------------------------------------------------
// QSD candidate
// ---------------------------------------------------------------------------

QsdResult qsd_candidate(const SingleDeathModel& m, double theta, const TruncationWindow& w,
                        Process which, const std::optional<DecayEstimate>& decay) {
  if (!(theta > 0.0)) fail(Err::InvalidQuery, "theta must be > 0");
  const int top = w.top();

  // killed route: raw_i = W^(c - theta)(0, i); non-killed: theta W^(-theta)(0, i)
  WeightFunction omega = which == Process::X
                             ? WeightFunction::constant(-theta, top).plus_killing(m)
                             : WeightFunction::constant(-theta, top);
  PotentialTable tab(m, omega, top);

  std::vector<double> raw(static_cast<std::size_t>(top), 0.0);
  double max_abs = 0.0;
  for (State i = 1; i <= top; ++i) {
    double v = tab.w(0, i);
    raw[static_cast<std::size_t>(i) - 1] = v;
    max_abs = std::max(max_abs, std::abs(v));
  }

  QsdResult out;
  out.theta = theta;
  out.which = which;

  const double neg_tol = w.tol * std::max(1.0, max_abs);
  for (double& v : raw) {
    if (v < 0.0) {
      if (v < -neg_tol)
        fail(Err::NegativeMass, "W^(c-theta)(0,i) has entries below -tol; theta=" +
                                    std::to_string(theta) + " is outside the admissible range");
      ++out.negative_entries;
      v = 0.0;
    }
  }

  // normalizability along the schedule
  std::vector<double> partial;
  {
    CompensatedSum acc;
    std::size_t next = 0;
    for (State u = 1; u <= top; ++u) {
      acc.add(raw[static_cast<std::size_t>(u) - 1]);
      while (next < w.schedule.size() && w.schedule[next] == u) {
        partial.push_back(acc.value());
        ++next;
      }
    }
  }
  if (judge_series(partial, w.tol) == Verdict::Diverging)
    fail(Err::NotNormalizable, "partial sums of W^(c-theta)(0,.) diverge on the window");

  double mass_win = partial.back();
  if (!(mass_win > 0.0)) fail(Err::NotNormalizable, "candidate has no positive mass");
  std::vector<int> lv(w.schedule.begin(), w.schedule.end());
  double tail_raw = geometric_tail_estimate(lv, partial).value_or(0.0);

  double total = mass_win + tail_raw;
  out.probs.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.probs[i] = raw[i] / total;
  out.tail_mass = tail_raw / total;
  if (which == Process::Y) out.normalization_defect = std::abs(1.0 - theta * total);

  // family tag from the S-series and the decay estimate when provided
  PotentialTable plain(m, WeightFunction::zero(top), top);
  SeriesDiagnostic S = run_series("sum W(0,u)", w, [&](State u) { return plain.w(0, u); });
  if (decay) {
    double lam = decay->lambda0;
    double slack = std::max(decay->drift, w.tol * std::max(1.0, lam));
    if (theta > lam + slack)
      fail(Err::InvalidQuery, "theta exceeds the estimated decay parameter plus slack");
    if (S.verdict == Verdict::Converged && std::abs(theta - lam) <= slack)
      out.family_tag = "unique";
    else if (S.verdict == Verdict::Diverging && theta <= lam + slack)
      out.family_tag = "continuum-member";
  } else if (S.verdict == Verdict::Diverging) {
    out.family_tag = "continuum-member";
  }

  out.residual = stationarity_residual(m, out, w);
  return out;
}

double stationarity_residual(const SingleDeathModel& m, const QsdResult& nu,
                             const TruncationWindow& w) {
  const int N = static_cast<int>(nu.probs.size());
  if (N < 3) fail(Err::InvalidArgument, "candidate too short");
  const int margin = 2;
  double max_p = 0.0;
  for (double p : nu.probs) max_p = std::max(max_p, p);
  const double floor = 1e-8 * std::max(max_p, 1e-300);
  const bool killed = nu.which == Process::X;

  auto prob = [&](State i) {
    return (i >= 1 && i <= N) ? nu.probs[static_cast<std::size_t>(i) - 1] : 0.0;
  };

  double worst = 0.0;
  for (State j = 1; j <= N - margin; ++j) {
    CompensatedSum col;
    // diagonal and down-jump into j
    double qj = m.motion_rate(j) + (killed ? m.killing(j) : 0.0);
    col.add(-qj * prob(j));
    col.add(m.down(j + 1) * prob(j + 1));
    // upward jumps into j from i < j
    for (State i = 1; i < j; ++i) {
      double r = m.up_rate(i, j);
      if (r != 0.0) col.add(r * prob(i));
    }
    double defect = std::abs(col.value() + nu.theta * prob(j));
    worst = std::max(worst, defect / std::max(prob(j), floor));
  }
  (void)w;
  return worst;
}

// ---------------------------------------------------------------------------
// Doob transform
// ---------------------------------------------------------------------------

DoobModel doob_transform(const SingleDeathModel& m, const TruncationWindow& w) {
  HarmonicFunction hf = harmonic_h(m, w);  // throws SmallKillingNotEstablished
  const int L = static_cast<int>(hf.h.size()) - 1;

  auto h = [&](State i) -> double { return hf.h[static_cast<std::size_t>(i)]; };

  std::vector<double> down_rates(static_cast<std::size_t>(L));
  std::vector<std::vector<UpRates::Entry>> up_rows(static_cast<std::size_t>(L));
  std::vector<double> residual(static_cast<std::size_t>(L), 0.0);

  for (State i = 1; i <= L; ++i) {
    double hi = h(i);
    down_rates[static_cast<std::size_t>(i) - 1] = m.down(i) * h(i - 1) / hi;
    CompensatedSum offdiag;
    offdiag.add(down_rates[static_cast<std::size_t>(i) - 1]);
    auto& row = up_rows[static_cast<std::size_t>(i) - 1];
    m.up().visit(i, L, [&](State j, double r) {
      double rb = r * h(j) / hi;
      row.emplace_back(j, rb);
      offdiag.add(rb);
    });
    // mass jumping past the harmonic window cannot be transformed exactly;
    // it shows up in the conservativeness residual
    residual[static_cast<std::size_t>(i) - 1] =
        std::abs(offdiag.value() - m.total_rate(i)) / std::max(1.0, m.total_rate(i));
  }

  DoobModel out{SingleDeathModel::from_parts(Sequence::list(std::move(down_rates)),
                                             UpRates::per_state_list(std::move(up_rows)),
                                             Sequence::zero(), L,
                                             /*allow_zero_killing=*/true),
                std::move(hf.h), std::move(residual), L};
  return out;
}

double doob_g_closed_form(const SingleDeathModel& m, double q, State k, State N,
                          const TruncationWindow& w) {
  if (!(1 <= k && k <= N)) fail(Err::InvalidQuery, "doob_g_closed_form requires 1 <= k <= N");
  HarmonicFunction hf = harmonic_h(m, w);
  const int top = w.top();
  if (N >= top) fail(Err::LevelExceeded, "N must sit inside the window");

  WeightFunction qc = WeightFunction::constant(q, top).plus_killing(m);
  PotentialTable tab(m, qc, top);

  auto zinf = [&](State i) { return hf.z_inf[static_cast<std::size_t>(i)]; };
  return m.down(N) * zinf(N - 1) *
         (tab.w(k - 1, N) / zinf(k - 1) - tab.w(k, N) / zinf(k));
}

// ---------------------------------------------------------------------------
// regime classification
// ---------------------------------------------------------------------------

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::NoQSD: return "NoQSD";
    case Regime::Continuum: return "Continuum";
    case Regime::Unique: return "Unique";
    case Regime::UniqueUniform: return "UniqueUniform";
    case Regime::UniqueLargeKilling: return "UniqueLargeKilling";
    case Regime::Undetermined: return "Undetermined";
  }
  return "?";
}

Regime classify_from(const RegimeDiagnostic& diag, const DecayEstimate& decay,
                     std::string* rationale) {
  auto say = [&](const std::string& s) {
    if (rationale) *rationale = s;
  };
  if (diag.large_killing_flag) {
    say("large killing: witnessed liminf c_n = " + std::to_string(diag.liminf_c_proxy) +
        " > inf_n q_n = " + std::to_string(diag.inf_q) +
        "; unique QSD with exponential convergence");
    return Regime::UniqueLargeKilling;
  }
  if (diag.C.verdict == Verdict::Converged) {
    if (decay.near_zero()) {
      say("small killing holds but the decay estimate " + std::to_string(decay.lambda0) +
          " fell below 10x the level drift " + std::to_string(decay.drift) + "; no QSD");
      return Regime::NoQSD;
    }
    if (diag.S.verdict == Verdict::Diverging) {
      say("small killing, positive decay, sum W(0,u) diverging: a continuum of QSDs");
      return Regime::Continuum;
    }
    if (diag.S.verdict == Verdict::Converged) {
      say("small killing and sum W(0,u) finite: unique QSD with exponential convergence");
      return Regime::Unique;
    }
    say("small killing holds but sum W(0,u) is undetermined on this window");
    return Regime::Undetermined;
  }
  if (diag.killing_bounded_witness && diag.S.verdict == Verdict::Converged) {
    say("bounded killing and sum W(0,u) finite: unique QSD with uniform exponential convergence");
    return Regime::UniqueUniform;
  }
  say("no implemented killing-regime hypothesis is witnessed on this window");
  return Regime::Undetermined;
}

Classification classify_regime(const SingleDeathModel& m, const TruncationWindow& w) {
  Classification c;
  c.diag = killing_regime(m, w);
  c.decay = decay_parameter(m, w, Process::X);
  c.regime = classify_from(c.diag, c.decay, &c.rationale);
  return c;
}

namespace {
json series_json(const SeriesDiagnostic& s) {
  json j{{"label", s.label},
         {"levels", s.levels},
         {"partial_sums", s.partial},
         {"verdict", verdict_name(s.verdict)},
         {"value", s.value()}};
  if (s.tail_estimate) j["tail_estimate"] = *s.tail_estimate;
  return j;
}
}  // namespace

json Classification::evidence() const {
  return json{
      {"disclaimer", "verdicts are numerical evidence on a finite window, not proofs"},
      {"S", series_json(diag.S)},
      {"C", series_json(diag.C)},
      {"coming_down_before_killing", series_json(diag.CDFIBK)},
      {"large_killing",
       {{"flag", diag.large_killing_flag},
        {"liminf_c_proxy", diag.liminf_c_proxy},
        {"inf_q", diag.inf_q}}},
      {"killing_bounded",
       {{"witness", diag.killing_bounded_witness}, {"sup_on_window", diag.killing_sup_witness}}},
      {"decay",
       {{"which", decay.which == Process::X ? "X" : "Y"},
        {"levels", decay.levels},
        {"per_level", decay.per_level},
        {"lambda0", decay.lambda0},
        {"drift", decay.drift},
        {"monotone_nonincreasing", decay.monotone_nonincreasing},
        {"near_zero_rule", "lambda0 < 10 * drift"},
        {"near_zero", decay.near_zero()},
        {"degenerate_flagged", decay.degenerate_flagged}}},
      {"regime", regime_name(regime)},
      {"rationale", rationale}};
}

}  // namespace sdq::qsd

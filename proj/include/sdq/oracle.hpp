#pragma once

#include <vector>

#include "sdq/model.hpp"
#include "sdq/potential.hpp"

namespace sdq::oracle {

// Dense (rows x cols) table with 0-based flat storage; small-N reference use.
struct DenseTable {
  int rows = 0, cols = 0;
  std::vector<double> a;
  DenseTable() = default;
  DenseTable(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

// Solves (Q^(Y) - Omega) F(.,j) = delta_j on rows 1..j with F(l,j) = 0 for
// l >= j, by dense LU, one column at a time.  Returns F(i,j) for
// 0 <= i,j <= N (upward-triangular).
DenseTable poisson_solve(const SingleDeathModel& m, const WeightFunction& omega, int N);

// Reference two-sided exit quantities on the strip (a, N), computed from the
// generator restricted to states a+1..N-1 by dense LU.
//   downcross[i]  = E_i[e^{-int omega}; T_a first]
//   upcross[i]    = E_i[e^{-int omega}; T_{N+} (or killing) first]
//   occupation(i,j) = E_i[int e^{-int omega} 1_{X=j} dt] before exit
// Indices are absolute states; with_killing selects X (weight acts on top of
// the killing loss) or Y.
struct ExitOracle {
  State a = 0, upper = 0;
  std::vector<double> downcross, upcross;  // index by start state i in (a, upper)
  DenseTable occupation;                   // (i - a - 1, j - a - 1)
  double down_at(State i) const { return downcross[static_cast<std::size_t>(i - a) - 1]; }
  double up_at(State i) const { return upcross[static_cast<std::size_t>(i - a) - 1]; }
  double occ_at(State i, State j) const { return occupation.at(i - a - 1, j - a - 1); }
};

ExitOracle exit_oracle(const SingleDeathModel& m, const WeightFunction& omega, State a, State upper,
                       bool with_killing);

// Sub-stochastic transition matrix p_ij(t) on states 0..N by uniformization,
// with state 0 absorbing and killing as mass loss; Poisson truncation error
// below 1e-13.
DenseTable transition_matrix(const SingleDeathModel& m, int N, double t);

// Principal (least-negative) eigenvalue -rate of the killed generator
// restricted to 1..N and its non-negative left eigenvector normalized to sum
// one, by shifted inverse-power iteration with Rayleigh refinement.
// Degenerate spectra (residual plateau while the shift stalls) are flagged;
// the eigenvalue remains trustworthy, the vector does not.
struct EigenPair {
  double rate = 0.0;
  std::vector<double> left;  // size N, states 1..N
  double residual = 0.0;
  bool degenerate = false;
  int iterations = 0;
};

EigenPair principal_eigenpair(const SingleDeathModel& m, int N);

}  // namespace sdq::oracle

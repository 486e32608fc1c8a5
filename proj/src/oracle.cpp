#include "sdq/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace sdq::oracle {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dense killed generator restricted to states 1..N: absorption into 0,
// killing, and up-jumps past N all appear as row-sum deficit.
MatrixXd restricted_generator(const SingleDeathModel& m, int N, bool with_killing) {
  MatrixXd A = MatrixXd::Zero(N, N);
  for (State i = 1; i <= N; ++i) {
    double qi = m.motion_rate(i) + (with_killing ? m.killing(i) : 0.0);
    A(i - 1, i - 1) = -qi;
    if (i >= 2) A(i - 1, i - 2) = m.down(i);
    m.up().visit(i, N, [&](State j, double r) { A(i - 1, j - 1) += r; });
  }
  return A;
}

void check_solution(const MatrixXd& B, const VectorXd& x, const VectorXd& rhs,
                    const char* what) {
  double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  double res = (B * x - rhs).lpNorm<Eigen::Infinity>();
  if (!x.allFinite() || res > 1e-6 * scale * std::max(1.0, x.lpNorm<Eigen::Infinity>()))
    fail(Err::SingularSystem, std::string(what) + ": linear system close to singular");
}

}  // namespace

DenseTable poisson_solve(const SingleDeathModel& m, const WeightFunction& omega, int N) {
  if (N < 2) fail(Err::InvalidArgument, "poisson_solve requires N >= 2");
  if (omega.level() < N) fail(Err::LevelExceeded, "weight shorter than N");
  DenseTable F(N + 1, N + 1);

  for (State j = 1; j <= N; ++j) {
    // unknowns x(l) = F(l, j) for l = 0..j-1; rows are the equations at
    // i = 1..j of (Q^(Y) - Omega) F(., j) = delta_j with F(l >= j, .) = 0
    MatrixXd B = MatrixXd::Zero(j, j);
    VectorXd rhs = VectorXd::Zero(j);
    rhs(j - 1) = 1.0;
    for (State i = 1; i <= j; ++i) {
      int row = i - 1;
      B(row, i - 1) += m.down(i);  // column l = i-1
      if (i <= j - 1) B(row, i) += -m.motion_rate(i) - omega.at(i);
      m.up().visit(i, j - 1, [&](State l, double r) { B(row, l) += r; });
    }
    Eigen::PartialPivLU<MatrixXd> lu(B);
    VectorXd x = lu.solve(rhs);
    check_solution(B, x, rhs, "poisson_solve");
    for (State l = 0; l < j; ++l) F.at(l, j) = x(l);
  }
  return F;
}

ExitOracle exit_oracle(const SingleDeathModel& m, const WeightFunction& omega, State a,
                       State upper, bool with_killing) {
  if (!(0 <= a && a + 1 < upper)) fail(Err::InvalidQuery, "exit_oracle requires a+1 < upper");
  if (omega.level() < upper) fail(Err::LevelExceeded, "weight shorter than upper barrier");
  const int n = upper - a - 1;  // states a+1 .. upper-1

  MatrixXd A = MatrixXd::Zero(n, n);
  VectorXd bdown = VectorXd::Zero(n);
  VectorXd bup = VectorXd::Zero(n);
  for (State i = a + 1; i < upper; ++i) {
    int row = i - a - 1;
    double kill = with_killing ? m.killing(i) : 0.0;
    A(row, row) = -(m.motion_rate(i) + kill + omega.at(i));
    if (i - 1 > a) A(row, i - 1 - a - 1) += m.down(i);
    else bdown(row) = m.down(i);
    m.up().visit(i, upper - 1, [&](State j, double r) { A(row, j - a - 1) += r; });
    bup(row) = m.up().tail(i, upper) + kill;
  }

  Eigen::PartialPivLU<MatrixXd> lu(A);
  VectorXd u = lu.solve(-bdown);
  check_solution(A, u, -bdown, "exit_oracle downcross");
  VectorXd v = lu.solve(-bup);
  check_solution(A, v, -bup, "exit_oracle upcross");

  ExitOracle out;
  out.a = a;
  out.upper = upper;
  out.downcross.assign(u.data(), u.data() + n);
  out.upcross.assign(v.data(), v.data() + n);
  out.occupation = DenseTable(n, n);
  MatrixXd G = lu.solve(-MatrixXd::Identity(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.occupation.at(i, j) = G(i, j);
  return out;
}

DenseTable transition_matrix(const SingleDeathModel& m, int N, double t) {
  if (N < 1) fail(Err::InvalidArgument, "transition_matrix requires N >= 1");
  if (t < 0) fail(Err::InvalidQuery, "time must be >= 0");

  double lam = 0.0;
  for (State i = 1; i <= N; ++i) lam = std::max(lam, m.total_rate(i));

  DenseTable out(N + 1, N + 1);
  if (t == 0.0 || lam == 0.0) {
    for (int i = 0; i <= N; ++i) out.at(i, i) = 1.0;
    return out;
  }

  // uniformized kernel on 0..N; state 0 absorbing, killing and over-the-top
  // jumps lose mass
  MatrixXd P = MatrixXd::Zero(N + 1, N + 1);
  P(0, 0) = 1.0;
  for (State i = 1; i <= N; ++i) {
    P(i, i - 1) = m.down(i) / lam;
    m.up().visit(i, N, [&](State j, double r) { P(i, j) += r / lam; });
    P(i, i) += 1.0 - m.total_rate(i) / lam;
  }

  const double mu = lam * t;
  const double hw = 10.0 * std::sqrt(mu) + 30.0;
  const long m_lo = std::max(0L, static_cast<long>(std::floor(mu - hw)));
  const long m_hi = static_cast<long>(std::ceil(mu + hw));

  // Poisson weights by log recurrence, representable near the mode
  auto log_w = [&](long k) { return k * std::log(mu) - mu - std::lgamma(double(k) + 1.0); };

  // M = P^m_lo by binary powering
  MatrixXd M = MatrixXd::Identity(N + 1, N + 1);
  {
    MatrixXd base = P;
    long e = m_lo;
    while (e > 0) {
      if (e & 1) M = M * base;
      base = base * base;
      e >>= 1;
    }
  }

  MatrixXd S = MatrixXd::Zero(N + 1, N + 1);
  for (long k = m_lo; k <= m_hi; ++k) {
    double w = std::exp(log_w(k));
    if (w > 0.0) S.noalias() += w * M;
    if (k < m_hi) M = M * P;
  }

  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) out.at(i, j) = S(i, j);
  return out;
}

EigenPair principal_eigenpair(const SingleDeathModel& m, int N) {
  if (N < 2) fail(Err::InvalidArgument, "principal_eigenpair requires N >= 2");
  MatrixXd A = restricted_generator(m, N, /*with_killing=*/true).transpose();

  VectorXd x = VectorXd::Ones(N);
  x.normalize();
  double rho = x.dot(A * x);

  // warm-up: plain inverse power with shift 0 pulls toward the eigenvalue
  // closest to the origin, which is the principal one for a Metzler
  // sub-generator
  {
    Eigen::PartialPivLU<MatrixXd> lu(A);
    for (int it = 0; it < 8; ++it) {
      VectorXd y = lu.solve(x);
      if (!y.allFinite() || y.norm() == 0.0) break;
      x = y.normalized();
    }
    rho = x.dot(A * x);
  }

  EigenPair out;
  int stall = 0;
  double res = std::numeric_limits<double>::infinity();
  const int max_iter = 500;
  int it = 0;
  for (; it < max_iter; ++it) {
    MatrixXd B = A - rho * MatrixXd::Identity(N, N);
    Eigen::PartialPivLU<MatrixXd> lu(B);
    VectorXd y = lu.solve(x);
    if (!y.allFinite() || y.norm() == 0.0) break;  // shift numerically exact
    x = y.normalized();
    double rho_new = x.dot(A * x);
    res = (A * x - rho_new * x).lpNorm<Eigen::Infinity>();
    double drho = std::abs(rho_new - rho);
    rho = rho_new;
    if (res < 1e-12 * std::max(1.0, std::abs(rho))) break;
    if (drho < 1e-14 * std::max(1.0, std::abs(rho))) {
      if (++stall >= 2) break;
    } else {
      stall = 0;
    }
  }
  if (it >= max_iter)
    fail(Err::IterationDivergence, "principal_eigenpair: no convergence after max iterations");

  res = (A * x - rho * x).lpNorm<Eigen::Infinity>();
  out.iterations = it + 1;
  out.rate = -rho;
  out.residual = res;
  out.degenerate = res > 1e-10 * std::max(1.0, std::abs(rho));

  // left eigenvector of Q_N, sign-fixed and clamped to the simplex
  if (x.sum() < 0) x = -x;
  double mx = x.cwiseAbs().maxCoeff();
  for (int i = 0; i < N; ++i) {
    if (x(i) < 0 && x(i) > -1e-10 * mx) x(i) = 0.0;
    if (x(i) < 0) out.degenerate = true;
  }
  double s = x.sum();
  out.left.assign(N, 0.0);
  if (s > 0)
    for (int i = 0; i < N; ++i) out.left[static_cast<std::size_t>(i)] = x(i) / s;
  return out;
}

}  // namespace sdq::oracle

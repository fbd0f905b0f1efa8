#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "g4v/errors.hpp"
#include "g4v/lanczos.hpp"
#include "g4v/units.hpp"

namespace g4v::jt {

/// One quadratic E(x)e Jahn-Teller problem: relaxation energy, barrier between
/// the three equivalent minima, and the effective phonon quantum. All in meV.
struct JTParams {
  double e_jt = 0.0;
  double delta_jt = 0.0;
  double hbar_omega = 0.0;

  void validate() const {
    if (!(e_jt > 0.0)) throw std::invalid_argument("JTParams: e_jt must be > 0");
    if (!(hbar_omega > 0.0)) throw std::invalid_argument("JTParams: hbar_omega must be > 0");
    if (!(delta_jt >= 0.0 && delta_jt < e_jt))
      throw std::invalid_argument("JTParams: need 0 <= delta_jt < e_jt (max attainable barrier is e_jt)");
  }
};

/// Couplings of H = hw(n+1) + V(Qx oz + Qy ox) + G[(Qx^2-Qy^2) oz - 2 Qx Qy ox]
/// in the dimensionless-coordinate convention Q = (a + a^+)/sqrt(2).
struct JTCouplings {
  double v_linear = 0.0;    // meV per unit Q
  double g_quadratic = 0.0; // meV per unit Q^2
};

/// Both adiabatic branches of the APES at (qx, qy), relative to the degenerate
/// point. Lower branch minima sit at depth -E_JT along cos(3*phi) = +1.
inline std::pair<double, double> apes_energies(double qx, double qy, const JTCouplings& c,
                                               double hbar_omega) {
  const double az = c.v_linear * qx + c.g_quadratic * (qx * qx - qy * qy);
  const double ax = c.v_linear * qy - 2.0 * c.g_quadratic * qx * qy;
  const double w = std::sqrt(az * az + ax * ax);
  const double harm = 0.5 * hbar_omega * (qx * qx + qy * qy);
  return {harm - w, harm + w};
}

namespace detail {
// Analytic depth of the minimum/saddle rings for V >= 0, 0 <= G < hw/2:
//   minima:  U = -V^2 / (2(hw - 2G))   at cos 3phi = +1
//   saddles: U = -V^2 / (2(hw + 2G))   at cos 3phi = -1
inline double barrier_for(double e_jt, double g, double hw) {
  const double v2 = 2.0 * e_jt * (hw - 2.0 * g);  // from fixing the minimum depth
  return 0.5 * v2 / (hw - 2.0 * g) - 0.5 * v2 / (hw + 2.0 * g);
}
}  // namespace detail

/// Invert (E_JT, delta_JT, hbar_omega) -> (V, G). V is eliminated through the
/// minimum-depth condition; G is found by bisection on the barrier, which is
/// strictly increasing on [0, hw/2).
inline JTCouplings fit_couplings(const JTParams& p) {
  p.validate();
  const double hw = p.hbar_omega;
  if (p.delta_jt == 0.0) return {std::sqrt(2.0 * p.e_jt * hw), 0.0};

  double lo = 0.0, hi = 0.5 * hw * (1.0 - 1e-14);
  const double max_barrier = detail::barrier_for(p.e_jt, hi, hw);
  if (p.delta_jt >= max_barrier)
    throw std::invalid_argument("fit_couplings: no real G reaches barrier " +
                                std::to_string(p.delta_jt) + " meV (max attainable " +
                                std::to_string(max_barrier) + " meV)");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (detail::barrier_for(p.e_jt, mid, hw) < p.delta_jt ? lo : hi) = mid;
  }
  const double g = 0.5 * (lo + hi);
  return {std::sqrt(2.0 * p.e_jt * (hw - 2.0 * g)), g};
}

/// Stationary-point analysis of the reconstructed APES (used by round-trip
/// checks): returns (depth, barrier) from the analytic ring extrema.
inline std::pair<double, double> apes_extrema(const JTCouplings& c, double hbar_omega) {
  const double denom_min = hbar_omega - 2.0 * c.g_quadratic;
  const double denom_sad = hbar_omega + 2.0 * c.g_quadratic;
  const double depth = 0.5 * c.v_linear * c.v_linear / denom_min;
  const double saddle = 0.5 * c.v_linear * c.v_linear / denom_sad;
  return {depth, depth - saddle};
}

/// Two-mode boson basis truncated at nx + ny <= N, tensored with the orbital
/// doublet {ex, ey}. Orbital index is the slow index: state = e * n_boson + k.
struct BosonBasis {
  int cutoff = 0;
  std::vector<std::pair<int, int>> occ;  // (nx, ny)
  std::vector<int> first_nx;             // index of (nx, 0)

  explicit BosonBasis(int n) : cutoff(n) {
    if (n < 1) throw std::invalid_argument("BosonBasis: cutoff must be >= 1");
    first_nx.reserve(n + 2);
    for (int nx = 0; nx <= n; ++nx) {
      first_nx.push_back(static_cast<int>(occ.size()));
      for (int ny = 0; ny <= n - nx; ++ny) occ.emplace_back(nx, ny);
    }
    first_nx.push_back(static_cast<int>(occ.size()));
  }
  int size() const { return static_cast<int>(occ.size()); }
  int dim() const { return 2 * size(); }
  // index of (nx, ny), or -1 outside the cutoff
  int index(int nx, int ny) const {
    if (nx < 0 || ny < 0 || nx + ny > cutoff) return -1;
    return first_nx[nx] + ny;
  }
};

/// Vibronic Hamiltonian as a sparse real symmetric matrix (meV). The zero of
/// energy is the electronic degeneracy point, so the bare oscillator ground
/// level sits at +hbar_omega.
inline Eigen::SparseMatrix<double> build_hamiltonian(const JTCouplings& c, double hbar_omega,
                                                     int cutoff,
                                                     std::int64_t max_nonzeros = 2'000'000) {
  BosonBasis basis(cutoff);
  const int nb = basis.size();
  const std::int64_t nnz_estimate = static_cast<std::int64_t>(basis.dim()) * 13;
  if (nnz_estimate > max_nonzeros)
    throw std::invalid_argument("build_hamiltonian: cutoff " + std::to_string(cutoff) +
                                " exceeds the nonzero budget");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nnz_estimate));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  // add' puts v on (row,col) for both orbital-diagonal entries weighted by oz,
  // or the orbital-offdiagonal pair weighted by ox.
  auto add_oz = [&](int kr, int kc, double v) {
    trip.emplace_back(kr, kc, v);
    trip.emplace_back(nb + kr, nb + kc, -v);
  };
  auto add_ox = [&](int kr, int kc, double v) {
    trip.emplace_back(kr, nb + kc, v);
    trip.emplace_back(nb + kr, kc, v);
  };

  for (int k = 0; k < nb; ++k) {
    const auto [nx, ny] = basis.occ[k];
    // hw (n + 1), orbital identity
    trip.emplace_back(k, k, hbar_omega * (nx + ny + 1));
    trip.emplace_back(nb + k, nb + k, hbar_omega * (nx + ny + 1));

    // Q = (a + a^+)/sqrt(2); one-quantum and two-quantum amplitudes
    auto q1 = [&](int n, int dn) {  // <n+dn| Q |n>
      return inv_sqrt2 * (dn == -1 ? std::sqrt(n) : std::sqrt(n + 1.0));
    };
    // V Qx oz
    for (int dn : {-1, +1}) {
      int k2 = basis.index(nx + dn, ny);
      if (k2 >= 0) add_oz(k2, k, c.v_linear * q1(nx, dn));
    }
    // V Qy ox
    for (int dn : {-1, +1}) {
      int k2 = basis.index(nx, ny + dn);
      if (k2 >= 0) add_ox(k2, k, c.v_linear * q1(ny, dn));
    }
    if (c.g_quadratic != 0.0) {
      // Q^2 = (a^2 + a^+2 + 2n + 1)/2 on a single mode
      auto q2 = [&](int n, int dn) {
        if (dn == 0) return (2.0 * n + 1.0) / 2.0;
        if (dn == -2) return std::sqrt(n * (n - 1.0)) / 2.0;
        return std::sqrt((n + 1.0) * (n + 2.0)) / 2.0;
      };
      // G (Qx^2 - Qy^2) oz
      for (int dn : {-2, 0, +2}) {
        int k2 = basis.index(nx + dn, ny);
        if (k2 >= 0) add_oz(k2, k, c.g_quadratic * q2(nx, dn));
        k2 = basis.index(nx, ny + dn);
        if (k2 >= 0 && dn != 0) add_oz(k2, k, -c.g_quadratic * q2(ny, dn));
        if (dn == 0) add_oz(k, k, -c.g_quadratic * q2(ny, 0));
      }
      // -2G Qx Qy ox
      for (int dx : {-1, +1})
        for (int dy : {-1, +1}) {
          int k2 = basis.index(nx + dx, ny + dy);
          if (k2 >= 0) add_ox(k2, k, -2.0 * c.g_quadratic * q1(nx, dx) * q1(ny, dy));
        }
    }
  }
  Eigen::SparseMatrix<double> H(basis.dim(), basis.dim());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

struct VibronicSolution {
  Eigen::VectorXd eigenvalues;   // ascending, meV
  Eigen::MatrixXd ground_doublet;  // two columns over the orbital x boson basis
  int cutoff = 0;
  bool converged = false;
  double ground_energy_change = 0.0;  // |E0(N) - E0(N-4)|, meV
  double residual = 0.0;
};

/// Lowest eigenpairs of the vibronic Hamiltonian. Convergence is judged by the
/// ground level's change between cutoffs N-4 and N (< 1e-6 * hbar_omega).
inline VibronicSolution solve(const JTCouplings& c, double hbar_omega, int cutoff,
                              int n_eigen = 4) {
  if (n_eigen < 2) throw std::invalid_argument("solve: need n_eigen >= 2");
  auto eig_at = [&](int n, int k) {
    auto H = build_hamiltonian(c, hbar_omega, n);
    lanczos::Options opt;
    opt.n_eigen = k;
    opt.block = 2;
    auto r = lanczos::lowest_eigenpairs_shift_invert(H, opt);
    if (!r.converged)
      throw ConvergenceError("solve: eigensolver stalled, residual " +
                             std::to_string(r.max_residual));
    return r;
  };

  auto full = eig_at(cutoff, n_eigen);
  VibronicSolution sol;
  sol.eigenvalues = full.eigenvalues;
  sol.ground_doublet = full.eigenvectors.leftCols(2);
  sol.cutoff = cutoff;
  sol.residual = full.max_residual;
  if (cutoff > 4) {
    auto ref = eig_at(cutoff - 4, 2);
    sol.ground_energy_change = std::abs(full.eigenvalues(0) - ref.eigenvalues(0));
    sol.converged = sol.ground_energy_change < 1e-6 * hbar_omega;
  }
  return sol;
}

/// Ham reduction factor p: largest-magnitude eigenvalue of the orbital Lz
/// projected onto the ground vibronic doublet. With real eigenvectors the 2x2
/// projection is [[0, i m], [-i m, 0]], so p = |m|.
inline double ham_factor_p(const VibronicSolution& sol) {
  if (!sol.converged)
    throw std::invalid_argument("ham_factor_p: solution is not converged");
  const Eigen::Index nb = sol.ground_doublet.rows() / 2;
  const double gap = std::abs(sol.eigenvalues(1) - sol.eigenvalues(0));
  if (gap > 1e-6 * std::max(1.0, std::abs(sol.eigenvalues(0))))
    throw std::runtime_error("ham_factor_p: two lowest states are not degenerate");
  const auto ax = sol.ground_doublet.col(0).head(nb);
  const auto ay = sol.ground_doublet.col(0).tail(nb);
  const auto bx = sol.ground_doublet.col(1).head(nb);
  const auto by = sol.ground_doublet.col(1).tail(nb);
  // <a| Lz |b> = i (<a_y|b_x> - <a_x|b_y>)
  const double m = ay.dot(bx) - ax.dot(by);
  return std::abs(m);
}

inline double ham_factor_q(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("ham_factor_q: p outside (0,1]");
  return 0.5 * (1.0 + p);
}

/// lambda = p * lambda0, returned in GHz.
inline Energy effective_lambda(double p, Energy lambda0) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("effective_lambda: p outside (0,1]");
  if (!std::isfinite(lambda0.value)) throw std::invalid_argument("effective_lambda: lambda0 not finite");
  return Energy::ghz(p * as_ghz(lambda0));
}

struct HamFactors {
  double p = 1.0;
  double q = 1.0;
  int cutoff = 0;
};

/// Full pipeline for one parameter row: fit couplings, diagonalize at the
/// default cutoff, escalate once if the ground level has not settled.
inline HamFactors ham_factors(const JTParams& params, int cutoff = 64, int escalated = 96) {
  const auto c = fit_couplings(params);
  auto sol = solve(c, params.hbar_omega, cutoff);
  if (!sol.converged && escalated > cutoff) sol = solve(c, params.hbar_omega, escalated);
  if (!sol.converged)
    throw ConvergenceError("ham_factors: ground level not converged at cutoff " +
                             std::to_string(sol.cutoff) + " (change " +
                             std::to_string(sol.ground_energy_change) + " meV)");
  const double p = ham_factor_p(sol);
  return {p, ham_factor_q(p), sol.cutoff};
}

}  // namespace g4v::jt

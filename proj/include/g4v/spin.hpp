#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "g4v/units.hpp"

namespace g4v::spin {

/// Effective on-axis hyperfine parameters (MHz). The dynamic pair (a1, a2)
/// carries the q vibronic reduction already; `reduced` records that.
struct EffectiveHF {
  double a_par = 0.0;
  double a_perp = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  bool reduced = true;
};

/// Static + dynamic quadrupole couplings (MHz); only meaningful for I >= 1.
struct QuadrupoleParams {
  double q_static = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double nuclear_moment_m2 = 0.0;
};

/// One defect/state/isotope system on (orbital doublet) x (spin 1/2) x (nuclear I).
/// lambda_eff is the Ham-reduced splitting, stored positive for the hole
/// picture: the {e+ up, e- down} Kramers pair is the lower branch.
struct SpinSystemSpec {
  double lambda_eff_ghz = 0.0;
  double g_factor = 2.0;
  std::optional<EffectiveHF> hf;
  std::optional<QuadrupoleParams> quad;
  double nuclear_spin = 0.0;  // half-integer or integer, >= 0
  MagneticField b_field{};    // along the defect z axis
  double orbital_zeeman_factor = 0.0;  // quenched orbital term, off by default

  int nuclear_dim() const { return static_cast<int>(std::lround(2.0 * nuclear_spin)) + 1; }
  int dim() const { return 4 * nuclear_dim(); }

  void validate() const {
    double twoI = 2.0 * nuclear_spin;
    if (nuclear_spin < 0.0 || std::abs(twoI - std::lround(twoI)) > 1e-9)
      throw std::invalid_argument("SpinSystemSpec: nuclear spin must be a non-negative half-integer");
    if (hf && nuclear_spin == 0.0)
      throw std::invalid_argument("SpinSystemSpec: hyperfine terms need I > 0");
    if (quad && nuclear_spin < 1.0)
      throw std::invalid_argument("SpinSystemSpec: quadrupole needs I >= 1");
    if (b_field.in_tesla() < 0.0)
      throw std::invalid_argument("SpinSystemSpec: field must be non-negative");
  }
};

namespace ops {

/// Angular momentum matrices for spin j in the |j, m> basis, m descending.
/// Everything downstream stays real: J+ and J- have real elements and Jz is
/// diagonal, which is all the Hamiltonian terms here use.
struct AngularMomentum {
  Eigen::MatrixXd jz, jp, jm;
  explicit AngularMomentum(double j) {
    const int d = static_cast<int>(std::lround(2.0 * j)) + 1;
    jz = Eigen::MatrixXd::Zero(d, d);
    jp = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) {
      const double m = j - k;
      jz(k, k) = m;
      if (k > 0) jp(k - 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));
    }
    jm = jp.transpose();
  }
};

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::MatrixXd kron3(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const Eigen::MatrixXd& c) {
  return kron(kron(a, b), c);
}

// Orbital doublet in the |e+>, |e-> basis. sigma_plus = |e+><e-|.
inline Eigen::MatrixXd orb_id() { return Eigen::MatrixXd::Identity(2, 2); }
inline Eigen::MatrixXd orb_lz() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}
inline Eigen::MatrixXd orb_sp() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}
inline Eigen::MatrixXd orb_sm() { return orb_sp().transpose(); }

}  // namespace ops

namespace detail {
inline double mu_b_mhz_per_gauss() {
  return constants::mu_b_ghz_per_tesla * 1e3 * constants::tesla_per_gauss;
}
inline void require_symmetric(const Eigen::MatrixXd& h, const char* who) {
  if (h.rows() != h.cols() || (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
}
}  // namespace detail

/// -lambda Lz Sz (hole-corrected sign): {e+ up, e- down} at -lambda/2.  MHz.
inline Eigen::MatrixXd build_soc(double lambda_eff_ghz, double nuclear_spin) {
  ops::AngularMomentum s(0.5);
  const int nd = static_cast<int>(std::lround(2.0 * nuclear_spin)) + 1;
  return -lambda_eff_ghz * 1e3 *
         ops::kron3(ops::orb_lz(), s.jz, Eigen::MatrixXd::Identity(nd, nd));
}

/// g mu_B B Sz; the nuclear Zeeman term is dropped (negligible next to this).
inline Eigen::MatrixXd build_zeeman(double g, MagneticField b, double nuclear_spin,
                                    double orbital_zeeman_factor = 0.0) {
  ops::AngularMomentum s(0.5);
  const int nd = static_cast<int>(std::lround(2.0 * nuclear_spin)) + 1;
  const double zeeman_mhz = g * detail::mu_b_mhz_per_gauss() * b.in_gauss();
  Eigen::MatrixXd h =
      zeeman_mhz * ops::kron3(ops::orb_id(), s.jz, Eigen::MatrixXd::Identity(nd, nd));
  if (orbital_zeeman_factor != 0.0) {
    const double orb_mhz = orbital_zeeman_factor * detail::mu_b_mhz_per_gauss() * b.in_gauss();
    h += orb_mhz * ops::kron3(ops::orb_lz(), Eigen::MatrixXd::Identity(2, 2),
                              Eigen::MatrixXd::Identity(nd, nd));
  }
  return h;
}

/// (A_perp/2)(S+I- + S-I+) + A_par Sz Iz, identity on the orbital doublet.
inline Eigen::MatrixXd build_static_hf(const EffectiveHF& hf, double nuclear_spin) {
  if (!(nuclear_spin > 0.0)) throw std::invalid_argument("build_static_hf: requires I > 0");
  ops::AngularMomentum s(0.5), n(nuclear_spin);
  return ops::kron3(ops::orb_id(), s.jp, n.jm) * (0.5 * hf.a_perp) +
         ops::kron3(ops::orb_id(), s.jm, n.jp) * (0.5 * hf.a_perp) +
         ops::kron3(ops::orb_id(), s.jz, n.jz) * hf.a_par;
}

/// A1[(S+Iz + SzI+)s- + (SzI- + S-Iz)s+] + A2[S-I-s- + S+I+s+],
/// with s+ = |e+><e-|. Hermitian by construction.
inline Eigen::MatrixXd build_dynamic_hf(const EffectiveHF& hf, double nuclear_spin) {
  if (!(nuclear_spin > 0.0)) throw std::invalid_argument("build_dynamic_hf: requires I > 0");
  ops::AngularMomentum s(0.5), n(nuclear_spin);
  auto sp = ops::orb_sp(), sm = ops::orb_sm();
  Eigen::MatrixXd h =
      hf.a1 * (ops::kron3(sm, s.jp, n.jz) + ops::kron3(sm, s.jz, n.jp) +
               ops::kron3(sp, s.jz, n.jm) + ops::kron3(sp, s.jm, n.jz));
  h += hf.a2 * (ops::kron3(sm, s.jm, n.jm) + ops::kron3(sp, s.jp, n.jp));
  return h;
}

/// Q[Iz^2 - I(I+1)/3] + Q1[(I+Iz + IzI+)s- + h.c.] + Q2[I-^2 s- + I+^2 s+].
inline Eigen::MatrixXd build_quadrupole(const QuadrupoleParams& quad, double nuclear_spin) {
  if (nuclear_spin < 1.0)
    throw std::invalid_argument("build_quadrupole: quadrupole vanishes for I < 1");
  ops::AngularMomentum n(nuclear_spin);
  const int nd = static_cast<int>(n.jz.rows());
  Eigen::MatrixXd spin_id = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd izz = n.jz * n.jz -
                        (nuclear_spin * (nuclear_spin + 1.0) / 3.0) *
                            Eigen::MatrixXd::Identity(nd, nd);
  Eigen::MatrixXd h = quad.q_static * ops::kron3(ops::orb_id(), spin_id, izz);
  auto sp = ops::orb_sp(), sm = ops::orb_sm();
  Eigen::MatrixXd ipz = n.jp * n.jz + n.jz * n.jp;
  h += quad.q1 * (ops::kron3(sm, spin_id, ipz) + ops::kron3(sp, spin_id, ipz.transpose()));
  h += quad.q2 * (ops::kron3(sm, spin_id, n.jm * n.jm) + ops::kron3(sp, spin_id, n.jp * n.jp));
  return h;
}

/// Q = rho e^2 V_ZZ / h, evaluated with SI constants, returned in MHz.
inline double quadrupole_coupling(double rho_m2, double v_zz) {
  if (!std::isfinite(rho_m2) || !std::isfinite(v_zz))
    throw std::invalid_argument("quadrupole_coupling: non-finite input");
  const double e = constants::elementary_charge_c;
  return rho_m2 * e * e * v_zz / constants::planck_j_s * 1e-6;
}

/// Sum of all requested terms; Hermitian by construction of each term.
inline Eigen::MatrixXd assemble(const SpinSystemSpec& spec) {
  spec.validate();
  const int nd = spec.nuclear_dim();
  Eigen::MatrixXd h = build_soc(spec.lambda_eff_ghz, spec.nuclear_spin);
  h += build_zeeman(spec.g_factor, spec.b_field, spec.nuclear_spin,
                    spec.orbital_zeeman_factor);
  if (spec.hf) {
    h += build_static_hf(*spec.hf, spec.nuclear_spin);
    if (spec.hf->a1 != 0.0 || spec.hf->a2 != 0.0)
      h += build_dynamic_hf(*spec.hf, spec.nuclear_spin);
  }
  if (spec.quad) h += build_quadrupole(*spec.quad, spec.nuclear_spin);
  (void)nd;
  return h;
}

struct LevelSet {
  Eigen::VectorXd energies_ghz;          // ascending
  std::vector<int> group_of_state;       // degeneracy group per state
  std::vector<int> group_size;
  Eigen::MatrixXd eigenvectors;          // columns, canonicalized in each group
  std::vector<double> sz_expect, iz_expect;
  double nuclear_spin = 0.0;
  int groups() const { return static_cast<int>(group_size.size()); }
};

namespace detail {
// Rotate eigenvectors inside each degenerate group so a projected observable
// is diagonal; keeps labels and downstream CSV output deterministic.
inline void canonicalize_group(Eigen::MatrixXd& vecs, int lo, int n,
                               const Eigen::MatrixXd& obs) {
  auto block = vecs.middleCols(lo, n);
  Eigen::MatrixXd proj = block.transpose() * obs * block;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (proj + proj.transpose()));
  // descending observable within the group
  Eigen::MatrixXd rot = es.eigenvectors().rowwise().reverse();
  vecs.middleCols(lo, n) = block * rot;
}
}  // namespace detail

/// Exact diagonalization with degeneracy grouping at 1e-6 GHz (1e-3 MHz) and
/// per-group canonicalization against Iz then Sz.
inline LevelSet levels(const Eigen::MatrixXd& h_mhz, double nuclear_spin) {
  detail::require_symmetric(h_mhz, "levels");
  const int nd = static_cast<int>(std::lround(2.0 * nuclear_spin)) + 1;
  if (h_mhz.rows() != 4 * nd)
    throw std::invalid_argument("levels: dimension does not match nuclear spin");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h_mhz);
  LevelSet out;
  out.nuclear_spin = nuclear_spin;
  out.energies_ghz = es.eigenvalues() * 1e-3;
  out.eigenvectors = es.eigenvectors();

  ops::AngularMomentum s(0.5), n(nuclear_spin);
  Eigen::MatrixXd sz = ops::kron3(ops::orb_id(), s.jz, Eigen::MatrixXd::Identity(nd, nd));
  Eigen::MatrixXd iz = ops::kron3(ops::orb_id(), Eigen::MatrixXd::Identity(2, 2), n.jz);

  const double tol_mhz = 1e-3;
  const int dim = static_cast<int>(h_mhz.rows());
  int start = 0;
  for (int i = 1; i <= dim; ++i) {
    if (i == dim || es.eigenvalues()(i) - es.eigenvalues()(i - 1) > tol_mhz) {
      const int sz_group = i - start;
      if (sz_group > 1) {
        detail::canonicalize_group(out.eigenvectors, start, sz_group, iz);
        // split by Iz expectation, then settle Sz inside equal-Iz runs
        int s2 = start;
        for (int k = start + 1; k <= i; ++k) {
          double cur = (k < i) ? (out.eigenvectors.col(k).transpose() * iz *
                                  out.eigenvectors.col(k))(0)
                               : 1e300;
          double prev = (out.eigenvectors.col(k - 1).transpose() * iz *
                         out.eigenvectors.col(k - 1))(0);
          if (k == i || std::abs(cur - prev) > 1e-6) {
            if (k - s2 > 1) detail::canonicalize_group(out.eigenvectors, s2, k - s2, sz);
            s2 = k;
          }
        }
      }
      for (int k = start; k < i; ++k) out.group_of_state.push_back(out.groups());
      out.group_size.push_back(sz_group);
      start = i;
    }
  }
  out.sz_expect.resize(dim);
  out.iz_expect.resize(dim);
  for (int k = 0; k < dim; ++k) {
    out.sz_expect[k] = (out.eigenvectors.col(k).transpose() * sz * out.eigenvectors.col(k))(0);
    out.iz_expect[k] = (out.eigenvectors.col(k).transpose() * iz * out.eigenvectors.col(k))(0);
  }
  return out;
}

inline LevelSet levels(const SpinSystemSpec& spec) {
  return levels(assemble(spec), spec.nuclear_spin);
}

/// Hyperfine splitting of the lowest spin-orbit branch for I = 1/2, from the
/// exact quartet: A = sum_i sign(<4 Sz Iz>_i) E_i over the four lowest states.
/// The sign label is constant on exact Kramers pairs, so this is basis-stable
/// at B = 0 as well. Returned as |A| in MHz.
inline double lowest_branch_hf_splitting(const SpinSystemSpec& spec) {
  if (std::abs(spec.nuclear_spin - 0.5) > 1e-12)
    throw std::invalid_argument("lowest_branch_hf_splitting: defined for I = 1/2");
  Eigen::MatrixXd h = assemble(spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  ops::AngularMomentum s(0.5), n(0.5);
  Eigen::MatrixXd szis =
      4.0 * ops::kron3(ops::orb_id(), s.jz, Eigen::MatrixXd::Identity(2, 2)) *
      ops::kron3(ops::orb_id(), Eigen::MatrixXd::Identity(2, 2), n.jz);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    double label = (es.eigenvectors().col(i).transpose() * szis * es.eigenvectors().col(i))(0);
    acc += (label >= 0.0 ? 1.0 : -1.0) * es.eigenvalues()(i);
  }
  return std::abs(acc);
}

/// Second-order approximation A = A_par + A1^2/(g mu_B B + A_par), MHz.
inline double hf_splitting_perturbative(double a_par, double a1, double g, MagneticField b) {
  const double denom = g * detail::mu_b_mhz_per_gauss() * b.in_gauss() + a_par;
  if (std::abs(denom) < 1e-9)
    throw std::domain_error("hf_splitting_perturbative: singular regime, g mu_B B + A_par ~ 0");
  return a_par + a1 * a1 / denom;
}

/// Optically observable hyperfine spacing: (A_u - A_g)/2, MHz.
inline double a_ple(double a_g, double a_u) { return 0.5 * (a_u - a_g); }

/// lambda_g + lambda_u, the spin-orbit contribution to the ZPL width.
inline Energy zpl_broadening_proxy(Energy lambda_g, Energy lambda_u) {
  return Energy::ghz(as_ghz(lambda_g) + as_ghz(lambda_u));
}

struct PleLine {
  double energy_ghz = 0.0;  // zpl_offset + (E_u - E_g)
  int ground_group = 0;
  int excited_group = 0;
  double weight = 0.0;
};

/// Optical lines between two level sets. The transition keeps the spin and
/// nuclear state and may keep or flip the orbital index (z and in-plane dipole
/// channels); the weight sums |<u|P|g>|^2 over degenerate members and both
/// channels. Nuclear-spin conservation is inherited from the channel operators
/// being identities on the nuclear factor.
inline std::vector<PleLine> ple_lines(const LevelSet& ground, const LevelSet& excited,
                                      Energy zpl_offset = Energy::ghz(0.0),
                                      double weight_cut = 1e-8) {
  if (ground.nuclear_spin != excited.nuclear_spin)
    throw std::invalid_argument("ple_lines: nuclear spin mismatch between manifolds");
  const int dim = static_cast<int>(ground.eigenvectors.rows());
  const int nd = static_cast<int>(std::lround(2.0 * ground.nuclear_spin)) + 1;

  Eigen::MatrixXd keep = ops::kron3(ops::orb_id(), Eigen::MatrixXd::Identity(2, 2),
                                    Eigen::MatrixXd::Identity(nd, nd));
  Eigen::MatrixXd flip = ops::kron3(ops::orb_sp() + ops::orb_sm(),
                                    Eigen::MatrixXd::Identity(2, 2),
                                    Eigen::MatrixXd::Identity(nd, nd));
  (void)dim;

  // group representative energies
  auto group_energy = [](const LevelSet& ls, int g) {
    double e = 0.0;
    int n = 0;
    for (int k = 0; k < ls.energies_ghz.size(); ++k)
      if (ls.group_of_state[k] == g) {
        e += ls.energies_ghz(k);
        ++n;
      }
    return e / n;
  };

  std::vector<PleLine> lines;
  for (int gu = 0; gu < excited.groups(); ++gu)
    for (int gg = 0; gg < ground.groups(); ++gg) {
      double w = 0.0;
      for (int iu = 0; iu < excited.energies_ghz.size(); ++iu) {
        if (excited.group_of_state[iu] != gu) continue;
        for (int ig = 0; ig < ground.energies_ghz.size(); ++ig) {
          if (ground.group_of_state[ig] != gg) continue;
          double az = excited.eigenvectors.col(iu).dot(keep * ground.eigenvectors.col(ig));
          double af = excited.eigenvectors.col(iu).dot(flip * ground.eigenvectors.col(ig));
          w += az * az + af * af;
        }
      }
      if (w > weight_cut) {
        lines.push_back({as_ghz(zpl_offset) + group_energy(excited, gu) - group_energy(ground, gg),
                         gg, gu, w});
      }
    }
  std::sort(lines.begin(), lines.end(),
            [](const PleLine& a, const PleLine& b) { return a.energy_ghz < b.energy_ghz; });
  return lines;
}

}  // namespace g4v::spin

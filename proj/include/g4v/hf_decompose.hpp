#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "g4v/errors.hpp"
#include "g4v/spin.hpp"

namespace g4v::hf {

enum class Frame { cubic_crystal, defect_axial };

/// Real symmetric 3x3 hyperfine tensor in MHz with its coordinate frame.
struct HyperfineTensor3 {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Frame frame = Frame::cubic_crystal;
  std::string site;

  void require_symmetric(double tol = 1e-6) const {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol)
      throw FrameError("tensor '" + site + "' has an antisymmetric part above " +
                       std::to_string(tol) + " MHz");
  }
};

inline HyperfineTensor3 tensor_from_components(double xx, double yy, double zz, double xy,
                                               double xz, double yz,
                                               std::string site = {}) {
  HyperfineTensor3 t;
  t.m << xx, xy, xz, xy, yy, yz, xz, yz, zz;
  t.site = std::move(site);
  return t;
}

/// Defect coordinate system: Z along one <111> direction, X along the
/// projection of `x_seed` onto the plane normal to Z. The defaults reproduce
/// the frames the shipped reference tables were computed in: on-axis work uses
/// x_seed = -y, the carbon pipeline x_seed = -x.
struct FrameConvention {
  Eigen::Vector3d axis = Eigen::Vector3d(1, 1, 1).normalized();
  Eigen::Vector3d x_seed = Eigen::Vector3d(0, -1, 0);

  // rows are (X, Y, Z) in cubic coordinates; defect components are R T R^T
  Eigen::Matrix3d rotation() const {
    Eigen::Vector3d z = axis.normalized();
    Eigen::Vector3d x = x_seed - x_seed.dot(z) * z;
    if (x.norm() < 1e-9)
      throw FrameError("FrameConvention: x_seed is parallel to the axis");
    x.normalize();
    Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix3d r;
    r.row(0) = x;
    r.row(1) = y;
    r.row(2) = z;
    return r;
  }

  static FrameConvention onaxis_default() { return {}; }
  static FrameConvention offaxis_default() {
    return {Eigen::Vector3d(1, 1, 1).normalized(), Eigen::Vector3d(-1, 0, 0)};
  }
};

namespace detail {
inline Eigen::Matrix3d rotation_about(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}
inline Eigen::Matrix3d similarity(const Eigen::Matrix3d& r, const Eigen::Matrix3d& t) {
  return r * t * r.transpose();
}
constexpr double third_turn = 2.0 * 3.14159265358979323846 / 3.0;
}  // namespace detail

/// R T R^T for a +-120 degree rotation about the defect axis. For the [111]
/// axis this is the cyclic permutation of cubic coordinates.
inline HyperfineTensor3 rotate_tensor(const HyperfineTensor3& t, int steps,
                                      const FrameConvention& conv = {}) {
  if (steps != 1 && steps != -1)
    throw std::invalid_argument("rotate_tensor: steps must be +1 or -1");
  t.require_symmetric();
  Eigen::Matrix3d r = detail::rotation_about(conv.axis, steps * detail::third_turn);
  HyperfineTensor3 out = t;
  out.m = detail::similarity(r, t.m);
  return out;
}

/// For a site on the C3 axis the symmetry partners are plain rotation images.
inline std::array<HyperfineTensor3, 3> generate_equivalents_onaxis(
    const HyperfineTensor3& t, const FrameConvention& conv = {}) {
  return {t, rotate_tensor(t, +1, conv), rotate_tensor(t, -1, conv)};
}

/// Normalization of the orbital-difference combination. `third` is the value
/// the rotated-state expansion fixes (it round-trips exactly and reproduces
/// the dopant reference values); `quarter` is the tabulated carbon-set
/// normalization, kept so those reference blocks reproduce bit-for-bit.
enum class DynNormalization { third, quarter };

struct OrbitalHFSet {
  HyperfineTensor3 a_mean, a_x, a_y;
  double q_applied = 1.0;
  DynNormalization normalization = DynNormalization::third;
};

/// Combine an already-rotated tensor triple (site responses at orbital angles
/// 0, +120, -120 degrees) into the static and orbital-flipping tensors.
inline OrbitalHFSet decompose(const HyperfineTensor3& a, const HyperfineTensor3& b,
                              const HyperfineTensor3& c, double q,
                              DynNormalization norm = DynNormalization::third) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("decompose: q outside (0,1]");
  if (a.frame != b.frame || a.frame != c.frame)
    throw FrameError("decompose: tensors are not in a common frame");
  for (const auto* t : {&a, &b, &c}) t->require_symmetric();

  const double fx = (norm == DynNormalization::third) ? q / 3.0 : q / 4.0;
  OrbitalHFSet out;
  out.q_applied = q;
  out.normalization = norm;
  out.a_mean.frame = out.a_x.frame = out.a_y.frame = a.frame;
  out.a_mean.m = (a.m + b.m + c.m) / 3.0;
  out.a_x.m = fx * (2.0 * a.m - b.m - c.m);
  out.a_y.m = (q / std::sqrt(3.0)) * (b.m - c.m);
  out.a_mean.site = out.a_x.site = out.a_y.site = a.site;
  return out;
}

/// On-axis site: the three orbital responses are rotation images of the one
/// measured tensor.
inline OrbitalHFSet decompose_onaxis(const HyperfineTensor3& t, double q,
                                     const FrameConvention& conv = {}) {
  auto eq = generate_equivalents_onaxis(t, conv);
  return decompose(eq[0], eq[1], eq[2], q, DynNormalization::third);
}

/// Off-axis site triple (tensors of the three C3-related atoms, common cubic
/// frame): rotate the second and third partners onto the first, then combine.
inline OrbitalHFSet decompose_offaxis(const HyperfineTensor3& c1, const HyperfineTensor3& c2,
                                      const HyperfineTensor3& c3, double q,
                                      const FrameConvention& conv = FrameConvention::offaxis_default(),
                                      DynNormalization norm = DynNormalization::quarter) {
  return decompose(c1, rotate_tensor(c2, +1, conv), rotate_tensor(c3, -1, conv), q, norm);
}

/// Exact inverse of decompose/decompose_offaxis: recover the site tensors from
/// an OrbitalHFSet (same normalization bookkeeping).
inline std::array<HyperfineTensor3, 3> invert_offaxis(
    const OrbitalHFSet& set, const FrameConvention& conv = FrameConvention::offaxis_default()) {
  const double q = set.q_applied;
  const double dxf = (set.normalization == DynNormalization::third) ? 3.0 : 4.0;
  Eigen::Matrix3d dx = dxf * set.a_x.m / q;
  Eigen::Matrix3d dy = std::sqrt(3.0) * set.a_y.m / q;
  HyperfineTensor3 a = set.a_mean, bp = set.a_mean, cp = set.a_mean;
  a.m = set.a_mean.m + dx / 3.0;
  bp.m = set.a_mean.m - dx / 6.0 + dy / 2.0;
  cp.m = set.a_mean.m - dx / 6.0 - dy / 2.0;
  return {a, rotate_tensor(bp, -1, conv), rotate_tensor(cp, +1, conv)};
}

inline HyperfineTensor3 to_defect_frame(const HyperfineTensor3& t, const FrameConvention& conv) {
  if (t.frame != Frame::cubic_crystal)
    throw FrameError("to_defect_frame: input must be in the cubic frame");
  HyperfineTensor3 out = t;
  out.m = detail::similarity(conv.rotation(), t.m);
  out.frame = Frame::defect_axial;
  return out;
}

/// The four on-axis parameters plus the residual of the on-axis template fit.
struct AxialExtraction {
  spin::EffectiveHF hf;
  double residual = 0.0;  // worst template violation, MHz
};

/// Read (A_par, A_perp, A1, A2) off the defect-frame form of an OrbitalHFSet.
/// In that frame the static part is diag(A_perp, A_perp, A_par) and
///   a_x = [[-A2, 0, A1], [0, A2, 0], [A1, 0, 0]]
///   a_y = [[0, A2, 0], [A2, 0, A1], [0, A1, 0]]
/// so every slot is read twice and the disagreement goes into the residual.
inline AxialExtraction extract_axial(const OrbitalHFSet& set,
                                     const FrameConvention& conv = {},
                                     double tolerance = 1e300) {
  auto mean = set.a_mean.frame == Frame::cubic_crystal ? to_defect_frame(set.a_mean, conv) : set.a_mean;
  auto ax = set.a_x.frame == Frame::cubic_crystal ? to_defect_frame(set.a_x, conv) : set.a_x;
  auto ay = set.a_y.frame == Frame::cubic_crystal ? to_defect_frame(set.a_y, conv) : set.a_y;

  AxialExtraction out;
  out.hf.a_par = mean.m(2, 2);
  out.hf.a_perp = 0.5 * (mean.m(0, 0) + mean.m(1, 1));
  out.hf.a1 = 0.5 * (ax.m(0, 2) + ay.m(1, 2));
  out.hf.a2 = 0.5 * (0.5 * (ax.m(1, 1) - ax.m(0, 0)) + ay.m(0, 1));
  out.hf.reduced = true;

  double r = 0.0;
  auto upd = [&](double v) { r = std::max(r, std::abs(v)); };
  upd(mean.m(0, 0) - mean.m(1, 1));
  upd(mean.m(0, 1));
  upd(mean.m(0, 2));
  upd(mean.m(1, 2));
  upd(ax.m(0, 2) - ay.m(1, 2));
  upd(0.5 * (ax.m(1, 1) - ax.m(0, 0)) - ay.m(0, 1));
  upd(ax.m(0, 1));
  upd(ax.m(1, 2));
  upd(ax.m(2, 2));
  upd(ay.m(0, 0));
  upd(ay.m(1, 1));
  upd(ay.m(2, 2));
  upd(ay.m(0, 2));
  out.residual = r;
  if (r > tolerance)
    throw FrameError("extract_axial: residual " + std::to_string(r) +
                     " MHz exceeds the on-axis tolerance; site is not on the axis");
  return out;
}

/// Pick the <111> direction about which the measured on-axis tensor is most
/// consistent with the axial template. Overridable by passing an explicit
/// FrameConvention downstream.
inline FrameConvention detect_axis(const HyperfineTensor3& t, double q = 1.0) {
  const Eigen::Vector3d candidates[] = {{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}};
  double best = 1e300;
  FrameConvention best_conv;
  for (const auto& axis : candidates) {
    FrameConvention conv;
    conv.axis = axis.normalized();
    // keep the default x_seed unless it degenerates with the axis
    if (std::abs(conv.x_seed.normalized().dot(conv.axis)) > 0.99)
      conv.x_seed = Eigen::Vector3d(1, 0, 0);
    auto set = decompose_onaxis(t, q, conv);
    double r = extract_axial(set, conv).residual;
    if (r < best) {
      best = r;
      best_conv = conv;
    }
  }
  return best_conv;
}

/// C2h carbon data comes as two tensors: the representative of the mirror pair
/// and the unique atom on the mirror plane. The full rotation triple is
/// reconstructed through a vertical mirror; `gauge` selects which rotational
/// image the printed representative is (a property of how the source data was
/// tabulated, carried in the data files).
inline std::array<HyperfineTensor3, 3> reconstruct_c2h_triple(const HyperfineTensor3& pair_rep,
                                                              const HyperfineTensor3& unique,
                                                              int gauge = 0) {
  pair_rep.require_symmetric();
  unique.require_symmetric();
  auto mirrored = [&](int which) {
    // the three vertical mirrors of D3d about [111] are the coordinate swaps
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    if (which == 0) m << 1, 0, 0, 0, 0, 1, 0, 1, 0;        // swap y,z
    else if (which == 1) m << 0, 1, 0, 1, 0, 0, 0, 0, 1;   // swap x,y
    else m << 0, 0, 1, 0, 1, 0, 1, 0, 0;                    // swap x,z
    HyperfineTensor3 out = pair_rep;
    out.m = m * pair_rep.m * m;
    return out;
  };
  FrameConvention conv;  // [111]
  switch (gauge) {
    case 0: return {mirrored(0), rotate_tensor(pair_rep, -1, conv), unique};
    case 1: return {mirrored(1), rotate_tensor(pair_rep, +1, conv), unique};
    case 2: return {mirrored(2), pair_rep, unique};
    case 3: return {rotate_tensor(pair_rep, -1, conv), mirrored(0), unique};
    case 4: return {rotate_tensor(pair_rep, +1, conv), mirrored(1), unique};
    case 5: return {pair_rep, mirrored(2), unique};
    default: throw std::invalid_argument("reconstruct_c2h_triple: gauge must be 0..5");
  }
}

}  // namespace g4v::hf

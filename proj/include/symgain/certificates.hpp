#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symgain/errors.hpp"
#include "symgain/gain.hpp"
#include "symgain/geometry.hpp"
#include "symgain/linalg.hpp"
#include "symgain/system.hpp"

namespace symgain {

/// Shape of the simulation value function V(x, x'):
/// Norm -> infinity-norm distance; Quadratic -> sqrt((x-x')^T Z (x-x')).
struct VForm {
  enum class Kind { Norm, Quadratic };
  Kind kind = Kind::Norm;
  Matrix z;

  static VForm norm() { return VForm{}; }
  static VForm quadratic(Matrix zz) {
    if (!zz.is_symmetric(1e-12)) throw NotSymmetric("V-form Z not symmetric");
    if (!is_positive_definite(zz)) throw NotPD("V-form Z not positive definite");
    VForm v;
    v.kind = Kind::Quadratic;
    v.z = std::move(zz);
    return v;
  }

  double eval(const Point& a, const Point& b) const {
    if (kind == Kind::Norm) return inf_dist(a, b);
    Point d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    std::vector<double> zd = z.apply(d);
    double q = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) q += d[i] * zd[i];
    return q > 0.0 ? std::sqrt(q) : 0.0;
  }
};

/// Incremental input-to-state stabilizability data for one subsystem:
/// the V-function form G, feedback H, and the comparison functions of the
/// two defining inequalities, plus the weak-triangle constant gamma_hat
/// and the output Lipschitz bound ell.
struct IncrementalStabilizabilityData {
  VForm form;
  FeedbackFn feedback;  // H (may wrap the zero feedback)
  GainFn alpha_lower = GainFn::identity();
  GainFn alpha_upper = GainFn::identity();
  GainFn kappa = GainFn::identity();
  GainFn gamma_int = GainFn::zero();
  GainFn gamma_ext = GainFn::zero();
  GainFn gamma_hat = GainFn::identity();
  GainFn ell = GainFn::identity();
  /// Generators may emit stated-but-unverified data; consumers should treat
  /// false as "reproduce formulas only".
  bool data_verified = true;
};

/// Free tuning functions of the certificate construction. psi and
/// kappa_hat must be linear with slope in (0,1); chi, when supplied, linear
/// with slope > 1 (it may be omitted whenever the gains it splits are
/// linear); lambda any symbolically invertible member.
struct TuningFunctions {
  GainFn lambda = GainFn::identity();
  std::optional<GainFn> chi;
  GainFn psi = GainFn::power(0.99, 1.0);
  GainFn kappa_hat = GainFn::identity();

  static TuningFunctions defaults(const GainFn& kappa) {
    TuningFunctions t;
    t.lambda = GainFn::identity();
    t.psi = GainFn::power(0.99, 1.0);
    t.kappa_hat = kappa;
    return t;
  }
};

enum class Direction { AbstractionToConcrete, ConcreteToAbstraction };

enum class RefinementKind { Nonlinear, Linear };

/// Per-subsystem alternating-simulation certificate: the comparison
/// functions of the one-step decay inequality, the quantization offset
/// eps, the concrete-input refinement rule, and the V-function form.
struct Certificate {
  GainFn alpha = GainFn::identity();
  GainFn sigma = GainFn::power(0.5, 1.0);
  GainFn rho_int = GainFn::zero();
  GainFn rho_ext = GainFn::zero();
  double eps = 0.0;
  RefinementKind refinement = RefinementKind::Nonlinear;
  FeedbackFn feedback;  // Nonlinear: u = H(x) + u_hat
  Matrix gain_k;        // Linear:    u = K(x - x_hat) + u_hat
  VForm vform;

  /// Concrete input refined from an abstract input at (x, x_hat).
  Point refine(const Point& x, const Point& x_hat, const Point& u_hat) const {
    if (refinement == RefinementKind::Nonlinear) {
      Point u(u_hat.size(), 0.0);
      if (feedback) feedback(x.data(), u.data());
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += u_hat[i];
      return u;
    }
    Point d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - x_hat[i];
    std::vector<double> kd = gain_k.apply(d);
    Point u(u_hat);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += kd[i];
    return u;
  }

  double decay_bound(double v, double w_mismatch, double uhat_norm) const {
    double m = sigma.eval(v);
    m = std::max(m, rho_int.eval(w_mismatch));
    m = std::max(m, rho_ext.eval(uhat_norm));
    return std::max(m, eps);
  }
};

namespace detail {

inline double linear_slope_in_unit(const GainFn& f, const char* name) {
  if (!f.is_linear() || f.is_zero())
    throw TuningInvalid(std::string(name) + " must be linear");
  double c = f.linear_slope();
  if (!(c > 0.0 && c < 1.0))
    throw TuningInvalid(std::string(name) + " slope must lie in (0,1)");
  return c;
}

inline void check_kappa_hat_below(const GainFn& kappa_hat, const GainFn& kappa) {
  const int samples = 1000;
  const double s_max = 1e6, decades = 12.0;
  for (int j = 0; j < samples; ++j) {
    double t = static_cast<double>(j) / (samples - 1);
    double s = s_max * std::pow(10.0, -decades * (1.0 - t));
    if (kappa_hat.eval(s) > kappa.eval(s) * (1.0 + 1e-12))
      throw TuningInvalid("kappa_hat exceeds kappa at sampled point");
  }
}

inline GainFn require_chi(const std::optional<GainFn>& chi) {
  if (!chi)
    throw ChiNotAdmissible("chi required for nonlinear gain splitting");
  if (!chi->is_linear() || chi->is_zero() || !(chi->linear_slope() > 1.0))
    throw ChiNotAdmissible("chi must be linear with slope > 1");
  return *chi;
}

}  // namespace detail

/**
 * Certificate for a quantized model of an incrementally stabilizable
 * subsystem. With the state quantization eta (and input quantization mu
 * for the concrete-to-abstraction direction):
 *
 *   sigma   = I_d - (I_d - psi) o kappa_hat
 *   rho_int = (I_d + lambda) o kappa_hat^-1 o psi^-1 [o chi] o gamma_int
 *   rho_ext = 0
 *   eps     = (I_d + lambda^-1) o kappa_hat^-1 o psi^-1
 *               [o chi o (chi - I_d)^-1] applied to gamma_hat(eta), or to
 *               gamma_ext(mu) + gamma_hat(eta) for the reverse direction
 *   alpha   = (ell o alpha_lower^-1)^-1
 *
 * The bracketed chi factors are omitted when the gains they split are
 * linear.
 */
inline Certificate derive_nonlinear_certificate(
    const IncrementalStabilizabilityData& data, const TuningFunctions& tuning,
    double eta, Direction direction, double mu = 0.0) {
  if (!(eta >= 0.0)) throw TuningInvalid("eta must be nonnegative");
  if (direction == Direction::ConcreteToAbstraction && !(mu >= 0.0))
    throw TuningInvalid("mu must be nonnegative");

  const double psi_c = detail::linear_slope_in_unit(tuning.psi, "psi");
  if (!tuning.kappa_hat.is_linear() || tuning.kappa_hat.is_zero())
    throw TuningInvalid("kappa_hat must be linear");
  const double kh_c = tuning.kappa_hat.linear_slope();
  if (!(kh_c > 0.0 && kh_c < 1.0))
    throw TuningInvalid("I_d - kappa_hat must be K-infinity");
  detail::check_kappa_hat_below(tuning.kappa_hat, data.kappa);

  GainFn lambda_inv = inverse(tuning.lambda);  // NotInvertible propagates

  Certificate cert;
  cert.sigma = GainFn::power(1.0 - (1.0 - psi_c) * kh_c, 1.0);

  // kappa_hat^-1 o psi^-1
  GainFn chain = compose(inverse(tuning.kappa_hat), inverse(tuning.psi));

  if (data.gamma_int.is_zero()) {
    cert.rho_int = GainFn::zero();
  } else if (data.gamma_int.is_linear()) {
    cert.rho_int = GainFn::compose_of(
        {id_plus(tuning.lambda), chain, data.gamma_int});
  } else {
    GainFn chi = detail::require_chi(tuning.chi);
    cert.rho_int = GainFn::compose_of(
        {id_plus(tuning.lambda), chain, chi, data.gamma_int});
  }
  cert.rho_ext = GainFn::zero();

  const bool forward = direction == Direction::AbstractionToConcrete;
  const bool arg_linear =
      forward ? data.gamma_hat.is_linear()
              : (data.gamma_hat.is_linear() && data.gamma_ext.is_linear());
  GainFn eps_outer;
  if (arg_linear) {
    eps_outer = GainFn::compose_of({id_plus(lambda_inv), chain});
  } else {
    GainFn chi = detail::require_chi(tuning.chi);
    eps_outer = GainFn::compose_of(
        {id_plus(lambda_inv), chain, chi, minus_id_inverse(chi)});
  }
  const double eps_arg = forward
                             ? data.gamma_hat.eval(eta)
                             : data.gamma_ext.eval(mu) + data.gamma_hat.eval(eta);
  cert.eps = eps_outer.eval(eps_arg);

  cert.alpha = inverse(compose(data.ell, inverse(data.alpha_lower)));
  cert.refinement = RefinementKind::Nonlinear;
  cert.feedback = data.feedback;
  cert.vform = data.form;

  if (less_than_identity(cert.sigma) != LtId::Yes)
    throw TuningInvalid("derived sigma is not below identity");
  return cert;
}

struct LmiResult {
  bool holds = false;
  double violation = 0.0;  // most negative eigenvalue magnitude when failing
};

/**
 * Verifies (1 + 2 theta) (A + B K)^T Z (A + B K) <= kappa_c Z in the
 * positive-semidefinite order, via the symmetric slack
 * S = kappa_c Z - (1 + 2 theta) Acl^T Z Acl and a cyclic Jacobi
 * eigensolve; Holds iff lambda_min(S) >= -1e-10 * ||S|| and Z > 0.
 */
inline LmiResult check_lmi(const Matrix& a, const Matrix& b, const Matrix& k,
                           const Matrix& z, double kappa_c, double theta) {
  if (!z.is_symmetric(1e-12)) throw NotSymmetric("Z is not symmetric");
  if (!is_positive_definite(z)) throw NotPD("Z is not positive definite");
  Matrix acl = a;
  if (!b.empty() && !k.empty()) acl = a + b * k;
  if (acl.rows() != z.rows() || acl.cols() != z.rows())
    throw DimensionMismatch("LMI operand shapes");
  Matrix s = z.scaled(kappa_c) -
             (acl.transpose() * z * acl).scaled(1.0 + 2.0 * theta);
  EigenSym e = jacobi_eigensym(s);
  double lmin = e.values.front();
  double norm = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
  LmiResult r;
  r.holds = lmin >= -1e-10 * norm;
  r.violation = r.holds ? 0.0 : -lmin;
  return r;
}

struct LinearSystem {
  Matrix a, b, c, d;
};

struct LinearCertificateParams {
  Matrix z;
  Matrix k;
  double kappa_c = 0.5;
  double theta = 0.5;
  double psi_c = 0.99;
  double delta_c = 1.0;
  double eta = 0.0;
  double mu = 0.0;
};

/**
 * Closed-form certificate for a quantized linear system under the LMI
 * route, with V(x, x_hat) = sqrt((x - x_hat)^T Z (x - x_hat)).
 */
inline Certificate derive_linear_certificate(const LinearSystem& sys,
                                             const LinearCertificateParams& prm,
                                             Direction direction) {
  if (!(prm.kappa_c > 0.0 && prm.kappa_c < 1.0))
    throw TuningInvalid("kappa_c must lie in (0,1)");
  if (!(prm.theta > 0.0)) throw TuningInvalid("theta must be positive");
  if (!(prm.psi_c > 0.0 && prm.psi_c < 1.0))
    throw TuningInvalid("psi_c must lie in (0,1)");
  if (!(prm.delta_c > 0.0)) throw TuningInvalid("delta_c must be positive");

  LmiResult lmi = check_lmi(sys.a, sys.b, prm.k, prm.z, prm.kappa_c, prm.theta);
  if (!lmi.holds)
    throw LmiFails("stability LMI fails with violation " +
                   std::to_string(lmi.violation));

  const std::size_t n = sys.a.rows();
  EigenSym ez = jacobi_eigensym(prm.z);
  const double z_min = ez.values.front(), z_max = ez.values.back();

  Matrix ctc = sys.c.transpose() * sys.c;
  const double c_max = lambda_max(ctc);
  if (!(c_max > 0.0)) throw Error("output map C is identically zero");

  const double kh_c = 1.0 - std::sqrt(prm.kappa_c);
  const double sigma_c = 1.0 - kh_c * (1.0 - prm.psi_c);

  Certificate cert;
  cert.alpha = GainFn::power(std::sqrt(z_min / (n * c_max)), 1.0);
  cert.sigma = GainFn::power(sigma_c, 1.0);

  double rho_c = 0.0;
  if (!sys.d.empty() && sys.d.max_abs() > 0.0) {
    const double p = static_cast<double>(sys.d.cols());
    double zd = spectral_norm(sqrt_spd(prm.z) * sys.d);
    rho_c = (1.0 + prm.delta_c) / (kh_c * prm.psi_c) *
            std::sqrt(p * (1.0 + prm.theta + prm.theta * prm.theta) /
                      prm.theta) *
            zd;
  }
  cert.rho_int = rho_c > 0.0 ? GainFn::power(rho_c, 1.0) : GainFn::zero();
  cert.rho_ext = GainFn::zero();

  double quant = prm.eta;
  if (direction == Direction::ConcreteToAbstraction)
    quant = sys.b.inf_norm() * prm.mu + prm.eta;
  cert.eps = (1.0 + 1.0 / prm.delta_c) / (kh_c * prm.psi_c) *
             std::sqrt(n * (2.0 + prm.theta) * z_max / prm.theta) * quant;

  cert.refinement = RefinementKind::Linear;
  cert.gain_k = prm.k;
  cert.vform = VForm::quadratic(prm.z);
  return cert;
}

}  // namespace symgain

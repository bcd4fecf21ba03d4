#include "vfrl/envs.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "vfrl/rng.hpp"

namespace vfrl {

namespace {

void check_finite(const auto& s) {
  if (!s.allFinite() || s.cwiseAbs().maxCoeff() > 1e6)
    throw TrialAbort("plant state diverged");
}

}  // namespace

CartPole::CartPole(CartPoleParams params) : p_(params) {
  require(p_.substeps >= 1, "cartpole: substeps >= 1");
  require(p_.control_rate_hz > 0, "cartpole: positive control rate");
}

void CartPole::reset(const Vec& q0) {
  require(q0.size() == 2, "cartpole: q0 must be [p, alpha]");
  s_ << q0(0), 0.0, q0(1), 0.0;
}

Eigen::Vector4d CartPole::deriv(const Eigen::Vector4d& s, double u) const {
  const double pd = s(1), al = s(2), ald = s(3);
  const double mc = p_.cart_mass, mp = p_.pole_mass, l = p_.pole_half_length;
  const double ca = std::cos(al), sa = std::sin(al);
  // [mc+mp      mp*l*ca ] [pdd]   [u - cc*pd + mp*l*ald^2*sa]
  // [mp*l*ca  (4/3)mp*l^2] [add] = [-cp*ald - mp*g*l*sa      ]
  const double a00 = mc + mp;
  const double a01 = mp * l * ca;
  const double a11 = (4.0 / 3.0) * mp * l * l;
  const double b0 = u - p_.cart_friction * pd + mp * l * ald * ald * sa;
  const double b1 = -p_.pivot_friction * ald - mp * p_.gravity * l * sa;
  const double det = a00 * a11 - a01 * a01;
  const double pdd = (a11 * b0 - a01 * b1) / det;
  const double add = (a00 * b1 - a01 * b0) / det;
  return {pd, pdd, ald, add};
}

double CartPole::energy(const Eigen::Vector4d& s) const {
  const double pd = s(1), al = s(2), ald = s(3);
  const double mc = p_.cart_mass, mp = p_.pole_mass, l = p_.pole_half_length;
  double kin = 0.5 * (mc + mp) * pd * pd + mp * l * std::cos(al) * pd * ald +
               0.5 * (4.0 / 3.0) * mp * l * l * ald * ald;
  double pot = mp * p_.gravity * l * (1.0 - std::cos(al));
  return kin + pot;
}

Vec CartPole::step(const Vec& u) {
  require(u.size() == 1, "cartpole: u must be scalar");
  const double h = control_dt() / p_.substeps;
  const double f = u(0);
  for (int k = 0; k < p_.substeps; ++k) {
    Eigen::Vector4d k1 = deriv(s_, f);
    Eigen::Vector4d k2 = deriv(s_ + 0.5 * h * k1, f);
    Eigen::Vector4d k3 = deriv(s_ + 0.5 * h * k2, f);
    Eigen::Vector4d k4 = deriv(s_ + h * k3, f);
    s_ += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  check_finite(s_);
  return positions();
}

Vec CartPole::positions() const {
  Vec q(2);
  q << s_(0), s_(2);
  return q;
}

MassSpringDamper::MassSpringDamper(MassSpringDamperParams params)
    : p_(params) {
  require(p_.mass > 0, "msd: positive mass");
  // Exact zero-order-hold discretization: exponentiate the dynamics
  // augmented with a constant-input channel.
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  A(0, 1) = 1.0;
  A(1, 0) = -p_.stiffness / p_.mass;
  A(1, 1) = -p_.damping / p_.mass;
  A(1, 2) = 1.0 / p_.mass;
  Eigen::Matrix3d E = (A * control_dt()).exp();
  phi_ = E.topLeftCorner<2, 2>();
  gamma_ = E.topRightCorner<2, 1>();
}

void MassSpringDamper::reset(const Vec& q0) {
  require(q0.size() == 1, "msd: q0 must be [x]");
  s_ << q0(0), 0.0;
}

Vec MassSpringDamper::step(const Vec& u) {
  require(u.size() == 1, "msd: u must be scalar");
  s_ = phi_ * s_ + gamma_ * u(0);
  check_finite(s_);
  return positions();
}

Vec MassSpringDamper::positions() const {
  Vec q(1);
  q << s_(0);
  return q;
}

Vec MeasureModel::apply(const Vec& q, uint64_t seed, uint32_t episode,
                        uint32_t vt) const {
  switch (kind) {
    case MeasureKind::none:
      return q;
    case MeasureKind::gaussian: {
      require(param.size() == q.size(), "measure: gaussian std per dim");
      Vec out(q.size());
      for (Eigen::Index d = 0; d < q.size(); ++d)
        out(d) = q(d) + param(d) * rng::normal(seed, rng::Stream::meas_noise,
                                               episode, vt, 0,
                                               static_cast<uint32_t>(d));
      return out;
    }
    case MeasureKind::quantize: {
      require(param.size() == q.size(), "measure: resolution per dim");
      Vec out(q.size());
      for (Eigen::Index d = 0; d < q.size(); ++d)
        out(d) = std::nearbyint(q(d) / param(d)) * param(d);
      return out;
    }
  }
  return q;
}

}  // namespace vfrl

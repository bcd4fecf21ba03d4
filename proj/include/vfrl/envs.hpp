#pragma once

#include <cstdint>
#include <memory>

#include "vfrl/common.hpp"

namespace vfrl {

// Simulated plant advancing one control period at a time. step() returns
// true positions; velocities stay internal, mirroring hardware without
// tachometers. Divergence (non-finite or exploding state) throws
// TrialAbort so the caller can mark the trial faulted.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual int dq() const = 0;
  virtual int du() const = 0;
  virtual double control_dt() const = 0;
  virtual void reset(const Vec& q0) = 0;  // positions; velocities zero
  virtual Vec step(const Vec& u) = 0;
  virtual Vec positions() const = 0;
};

struct CartPoleParams {
  double cart_mass = 0.5;
  double pole_mass = 0.5;
  double pole_half_length = 0.25;
  double gravity = 9.81;
  double cart_friction = 0.0;
  double pivot_friction = 0.0;
  double control_rate_hz = 30.0;
  int substeps = 10;
};

// Positions q = [cart position p, pole angle alpha]. alpha = 0 hangs
// down; the swing-up target is |alpha| = pi. RK4 on the coupled
// second-order dynamics at control_dt/substeps.
class CartPole final : public Plant {
 public:
  explicit CartPole(CartPoleParams params = {});
  int dq() const override { return 2; }
  int du() const override { return 1; }
  double control_dt() const override { return 1.0 / p_.control_rate_hz; }
  void reset(const Vec& q0) override;
  Vec step(const Vec& u) override;
  Vec positions() const override;

  // d/dt [p, pdot, alpha, alphadot] under force u; exposed for the
  // energy-conservation and linearization checks.
  Eigen::Vector4d deriv(const Eigen::Vector4d& s, double u) const;
  double energy(const Eigen::Vector4d& s) const;

 private:
  CartPoleParams p_;
  Eigen::Vector4d s_ = Eigen::Vector4d::Zero();
};

struct MassSpringDamperParams {
  double mass = 1.0;
  double stiffness = 4.0;
  double damping = 0.4;
  double control_rate_hz = 30.0;
};

// q = [x]. Linear dynamics discretized exactly over one control period
// (zero-order hold) via the matrix exponential of the augmented system.
class MassSpringDamper final : public Plant {
 public:
  explicit MassSpringDamper(MassSpringDamperParams params = {});
  int dq() const override { return 1; }
  int du() const override { return 1; }
  double control_dt() const override { return 1.0 / p_.control_rate_hz; }
  void reset(const Vec& q0) override;
  Vec step(const Vec& u) override;
  Vec positions() const override;

  const Eigen::Matrix2d& phi() const { return phi_; }
  const Eigen::Vector2d& gamma() const { return gamma_; }

 private:
  MassSpringDamperParams p_;
  Eigen::Matrix2d phi_;
  Eigen::Vector2d gamma_;
  Eigen::Vector2d s_ = Eigen::Vector2d::Zero();
};

// Sensor models applied to true positions. Virtual time vt is the
// measurement event index (history prefill occupies vt < m_q).
enum class MeasureKind { none, gaussian, quantize };

struct MeasureModel {
  MeasureKind kind = MeasureKind::none;
  Vec param;  // per-dim noise std (gaussian) or resolution (quantize)

  Vec apply(const Vec& q, uint64_t seed, uint32_t episode, uint32_t vt) const;
};

}  // namespace vfrl

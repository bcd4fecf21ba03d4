#include "vfrl/costs.hpp"

#include <cmath>
#include <numbers>

namespace vfrl {

namespace {

constexpr double kPi = std::numbers::pi;

// Logistic through tanh, the same composition the tape version uses.
inline double sigmoid(double z) { return 0.5 + 0.5 * std::tanh(0.5 * z); }

}  // namespace

double cartpole_cost(double p, double alpha) {
  double za = (std::abs(alpha) - kPi) * (1.0 / 3.0);
  double zp = p * 1.0;
  return 1.0 - std::exp(-(za * za + zp * zp));
}

double furuta_cost(double alpha_h, double alpha_v) {
  double zh = alpha_h * 0.5;
  double zv = (std::abs(alpha_v) - kPi) * 0.5;
  double base = 1.0 - std::exp(-(zh * zh + zv * zv));
  double barrier = sigmoid(10.0 * (-0.75 * kPi - alpha_h)) +
                   sigmoid(10.0 * (alpha_h - 0.75 * kPi));
  return base + barrier;
}

double posexp_cost(double x) { return 1.0 - std::exp(-(x * x)); }

double stage_cost(CostKind kind, const Vec& q) {
  switch (kind) {
    case CostKind::cartpole:
      require(q.size() == 2, "cartpole cost: q = [p, alpha]");
      return cartpole_cost(q(0), q(1));
    case CostKind::furuta:
      require(q.size() == 2, "furuta cost: q = [alpha_h, alpha_v]");
      return furuta_cost(q(0), q(1));
    case CostKind::posexp:
      require(q.size() == 1, "posexp cost: q = [x]");
      return posexp_cost(q(0));
  }
  throw std::invalid_argument("unknown cost kind");
}

namespace {

Tape::Var sigmoid_tape(Tape& t, Tape::Var z) {
  return t.add_scalar(t.scalar_mul(t.tanh(t.scalar_mul(z, 0.5)), 0.5), 0.5);
}

}  // namespace

Tape::Var stage_cost_tape(Tape& t, CostKind kind, Tape::Var q) {
  switch (kind) {
    case CostKind::cartpole: {
      require(t.cols(q) == 2, "cartpole cost: q = [p, alpha]");
      Tape::Var p = t.slice_cols(q, 0, 1);
      Tape::Var al = t.slice_cols(q, 1, 1);
      Tape::Var za =
          t.scalar_mul(t.add_scalar(t.abs(al), -kPi), 1.0 / 3.0);
      Tape::Var zp = t.scalar_mul(p, 1.0);
      Tape::Var e = t.exp(
          t.scalar_mul(t.add(t.square(za), t.square(zp)), -1.0));
      return t.add_scalar(t.scalar_mul(e, -1.0), 1.0);
    }
    case CostKind::furuta: {
      require(t.cols(q) == 2, "furuta cost: q = [alpha_h, alpha_v]");
      Tape::Var ah = t.slice_cols(q, 0, 1);
      Tape::Var av = t.slice_cols(q, 1, 1);
      Tape::Var zh = t.scalar_mul(ah, 0.5);
      Tape::Var zv = t.scalar_mul(t.add_scalar(t.abs(av), -kPi), 0.5);
      Tape::Var e = t.exp(
          t.scalar_mul(t.add(t.square(zh), t.square(zv)), -1.0));
      Tape::Var base = t.add_scalar(t.scalar_mul(e, -1.0), 1.0);
      Tape::Var b1 = sigmoid_tape(
          t, t.scalar_mul(t.add_scalar(t.scalar_mul(ah, -1.0), -0.75 * kPi),
                          10.0));
      Tape::Var b2 = sigmoid_tape(
          t, t.scalar_mul(t.add_scalar(ah, -0.75 * kPi), 10.0));
      return t.add(base, t.add(b1, b2));
    }
    case CostKind::posexp: {
      require(t.cols(q) == 1, "posexp cost: q = [x]");
      Tape::Var e = t.exp(t.scalar_mul(t.square(q), -1.0));
      return t.add_scalar(t.scalar_mul(e, -1.0), 1.0);
    }
  }
  throw std::invalid_argument("unknown cost kind");
}

}  // namespace vfrl

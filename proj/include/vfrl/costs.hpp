#pragma once

#include "vfrl/common.hpp"
#include "vfrl/tape.hpp"

namespace vfrl {

// Stage costs are saturating in [0, ~1) so every summand of the rollout
// objective is bounded. The tape versions apply the identical operation
// order to M particles at once; the scalar versions are used for logging
// executed trials and must agree bit-for-bit.
enum class CostKind { cartpole, furuta, posexp };

// q = [p, alpha]; zero exactly at upright (|alpha| = pi) centered cart.
double cartpole_cost(double p, double alpha);

// q = [alpha_h, alpha_v]; near-zero at hanging arm (alpha_h = 0) with
// vertical pole raised (|alpha_v| = pi); barrier terms push |alpha_h|
// away from 3*pi/4.
double furuta_cost(double alpha_h, double alpha_v);

// q = [x]; zero at the origin, saturating to 1 away from it.
double posexp_cost(double x);

double stage_cost(CostKind kind, const Vec& q);

// q: M x dq particle positions -> M x 1 per-particle cost.
Tape::Var stage_cost_tape(Tape& t, CostKind kind, Tape::Var q);

}  // namespace vfrl

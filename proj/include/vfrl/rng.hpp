#pragma once

#include <array>
#include <cstdint>

namespace vfrl::rng {

// Counter-based generator: every draw is a pure function of
// (seed, stream, i0, i1, i2, i3).  Draws are therefore independent of
// evaluation order, thread count, and chunking, which is what makes
// bit-identical parallel rollouts possible.
enum class Stream : uint32_t {
  particle_init = 1,  // initial particle positions, (iteration, 0, m, d)
  model_eps = 2,      // reparametrized transition draws, (iteration, t, m, d)
  fict_noise = 3,     // fictitious policy-input noise, (iteration, vt, m, d)
  policy_init = 4,    // policy parameter init, (kind, i, j, 0)
  explore = 5,        // exploration signal, (episode, t, d, k)
  meas_noise = 6,     // plant measurement noise, (episode, vt, 0, d)
  hyper_init = 7,     // reserved for randomized hyperparameter restarts
};

// Philox4x32-10 block function (Random123 constants and key schedule).
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key);

// Inverse standard-normal CDF: Acklam's rational approximation polished
// with one Halley step against erfc. |rel err| < 1e-13 on (0,1).
double normal_icdf(double p);

// Uniform on (0,1), both endpoints excluded.
double uniform01(uint64_t seed, Stream s, uint32_t i0, uint32_t i1,
                 uint32_t i2, uint32_t i3);

double uniform(uint64_t seed, Stream s, uint32_t i0, uint32_t i1, uint32_t i2,
               uint32_t i3, double lo, double hi);

double normal(uint64_t seed, Stream s, uint32_t i0, uint32_t i1, uint32_t i2,
              uint32_t i3);

}  // namespace vfrl::rng

#include "vfrl/rng.hpp"

#include <cmath>

namespace vfrl::rng {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;
constexpr uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

double uniform01(uint64_t seed, Stream s, uint32_t i0, uint32_t i1,
                 uint32_t i2, uint32_t i3) {
  std::array<uint32_t, 2> key = {
      static_cast<uint32_t>(seed),
      static_cast<uint32_t>(seed >> 32) ^
          (static_cast<uint32_t>(s) * 0x9E3779B9u)};
  auto out = philox4x32({i0, i1, i2, i3}, key);
  uint64_t bits = (static_cast<uint64_t>(out[0]) << 32) | out[1];
  // 53 significant bits, shifted off zero so the icdf never sees 0 or 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

double uniform(uint64_t seed, Stream s, uint32_t i0, uint32_t i1, uint32_t i2,
               uint32_t i3, double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, s, i0, i1, i2, i3);
}

double normal(uint64_t seed, Stream s, uint32_t i0, uint32_t i1, uint32_t i2,
              uint32_t i3) {
  return normal_icdf(uniform01(seed, s, i0, i1, i2, i3));
}

double normal_icdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;

  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step: e = Phi(x) - p, with Phi via erfc for tail accuracy.
  constexpr double sqrt2pi = 2.506628274631000502;
  double e = 0.5 * std::erfc(-x * M_SQRT1_2) - p;
  double u = e * sqrt2pi * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace vfrl::rng

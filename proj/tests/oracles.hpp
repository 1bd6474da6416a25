// oracles.hpp
// Test-only closed-form oracles, kept independent of the library's sampling
// and state-vector code paths: Bloch-geometry Born values, the singlet joint
// law as a cosine formula, Gaussian bin masses via erf, idealized fringe bin
// integrals, and textbook moments. Expected values asserted in the suites are
// computed here, not copied from the implementation.
#pragma once

#include <cmath>

#include "iqm/spacetime.hpp"

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

inline iqm::Vec3 bloch_vector(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

// Born value for outcome +1 of a spin measurement along `axis` on the pure
// state with Bloch angles (theta, phi): p = (1 + axis . n) / 2.
inline double born_plus(double theta, double phi, const iqm::Vec3& axis) {
    return 0.5 * (1.0 + axis.normalized().dot(bloch_vector(theta, phi)));
}

// Singlet joint law as a function of the angle between the settings:
// P(s1, s2) = (1 - s1 s2 cos(angle)) / 4.
inline double singlet_joint(int s1, int s2, double angle_rad) {
    return 0.25 * (1.0 - s1 * s2 * std::cos(angle_rad));
}

inline double singlet_correlation(double angle_rad) { return -std::cos(angle_rad); }

// The linear local-hidden-variable correlation for the anti-copy model with
// lambda uniform on the sphere: E = -1 + 2 theta / pi.
inline double linear_lhv_correlation(double angle_rad) { return -1.0 + 2.0 * angle_rad / kPi; }

// Mass a N(mu, sigma^2) variable puts in [lo, hi).
inline double gaussian_bin(double lo, double hi, double mu, double sigma) {
    auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
    return cdf(hi) - cdf(lo);
}

// Bin mass of the idealized two-route fringe density
// f(x) = (1 + v cos(2 pi x / period + phase)) / window on [lo, hi).
inline double fringe_bin(double lo, double hi, double period, double window, double v,
                         double phase = 0.0) {
    const double k = 2.0 * kPi / period;
    auto antiderivative = [&](double x) { return x + (v / k) * std::sin(k * x + phase); };
    return (antiderivative(hi) - antiderivative(lo)) / window;
}

// Variance of a fair k-sided die by enumeration.
inline double fair_die_variance(int faces) {
    double mean = 0.0;
    for (int j = 1; j <= faces; ++j) mean += j;
    mean /= faces;
    double var = 0.0;
    for (int j = 1; j <= faces; ++j) var += (j - mean) * (j - mean);
    return var / faces;
}

// 4-sigma binomial tolerance around probability p at sample size n.
inline double binomial_4sigma(double p, double n) { return 4.0 * std::sqrt(p * (1.0 - p) / n); }

}  // namespace oracle

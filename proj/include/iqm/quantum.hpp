// quantum.hpp
// Minimal state-vector kernels used by the quantum worlds: qubit states as
// normalized complex amplitude pairs, projective outcome probabilities along
// an arbitrary axis, SU(2) rotations, and the two-qubit singlet joint law
// computed from explicit tensor amplitudes.
#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "iqm/spacetime.hpp"

namespace iqm {

using Cx = std::complex<double>;

struct QubitState {
    Cx a0{1.0, 0.0};  // amplitude of |0> (spin up along z)
    Cx a1{0.0, 0.0};  // amplitude of |1>

    void normalize() {
        double n = std::sqrt(std::norm(a0) + std::norm(a1));
        if (n > 0.0) {
            a0 /= n;
            a1 /= n;
        }
    }
};

inline QubitState qubit_from_bloch(double theta, double phi) {
    QubitState s;
    s.a0 = Cx{std::cos(theta / 2.0), 0.0};
    s.a1 = std::polar(std::sin(theta / 2.0), phi);
    return s;
}

// (theta, phi) of the state's ray; global phase discarded.
inline std::array<double, 2> bloch_angles(const QubitState& s) {
    double m0 = std::abs(s.a0);
    double m1 = std::abs(s.a1);
    double theta = 2.0 * std::atan2(m1, m0);
    double phi = (m1 < 1e-15 || m0 < 1e-15) ? 0.0 : std::arg(s.a1) - std::arg(s.a0);
    return {theta, phi};
}

// Eigenvector of axis.sigma with eigenvalue +1, axis given by spherical angles
// of the unit vector.
inline QubitState plus_eigenvector(const Vec3& axis) {
    Vec3 u = axis.normalized();
    double theta = std::acos(u.z > 1.0 ? 1.0 : (u.z < -1.0 ? -1.0 : u.z));
    double phi = std::atan2(u.y, u.x);
    return qubit_from_bloch(theta, phi);
}

inline Cx inner(const QubitState& bra, const QubitState& ket) {
    return std::conj(bra.a0) * ket.a0 + std::conj(bra.a1) * ket.a1;
}

// Probability of outcome +1 when measuring axis.sigma on state s, from the
// amplitude in the +1 eigenvector.
inline double prob_plus(const QubitState& s, const Vec3& axis) {
    Cx amp = inner(plus_eigenvector(axis), s);
    double p = std::norm(amp);
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

// exp(-i angle/2 axis.sigma) applied to s.
inline QubitState rotate(const QubitState& s, const Vec3& axis, double angle) {
    Vec3 u = axis.normalized();
    double c = std::cos(angle / 2.0);
    double sn = std::sin(angle / 2.0);
    Cx u00{c, -sn * u.z};
    Cx u01{-sn * u.y, -sn * u.x};
    Cx u10{sn * u.y, -sn * u.x};
    Cx u11{c, sn * u.z};
    QubitState out;
    out.a0 = u00 * s.a0 + u01 * s.a1;
    out.a1 = u10 * s.a0 + u11 * s.a1;
    out.normalize();
    return out;
}

// Joint outcome probabilities for measuring a.sigma on subsystem 1 and
// b.sigma on subsystem 2 of the singlet (|01> - |10>)/sqrt(2), in the order
// (+,+), (+,-), (-,+), (-,-). Computed from the four tensor amplitudes.
inline std::array<double, 4> singlet_joint_probs(const Vec3& a, const Vec3& b) {
    const QubitState a_plus = plus_eigenvector(a);
    const QubitState b_plus = plus_eigenvector(b);
    // -1 eigenvector, orthogonal by construction: (-conj(a1), conj(a0)).
    auto minus_of = [](const QubitState& plus) {
        QubitState m;
        m.a0 = -std::conj(plus.a1);
        m.a1 = std::conj(plus.a0);
        return m;
    };
    const QubitState a_minus = minus_of(a_plus);
    const QubitState b_minus = minus_of(b_plus);

    const double inv_sqrt2 = 0.70710678118654752440;
    auto joint_amp = [&](const QubitState& ua, const QubitState& ub) {
        // <ua (x) ub | (|01> - |10>)/sqrt(2)>
        Cx amp = std::conj(ua.a0) * std::conj(ub.a1) - std::conj(ua.a1) * std::conj(ub.a0);
        return inv_sqrt2 * amp;
    };

    std::array<double, 4> p{};
    p[0] = std::norm(joint_amp(a_plus, b_plus));
    p[1] = std::norm(joint_amp(a_plus, b_minus));
    p[2] = std::norm(joint_amp(a_minus, b_plus));
    p[3] = std::norm(joint_amp(a_minus, b_minus));
    double total = p[0] + p[1] + p[2] + p[3];
    for (double& v : p) v /= total;
    return p;
}

}  // namespace iqm

#pragma once

// Minimal invariant interval [a_inf, b_inf] of the IFS, together with the
// monotone approximating sequences a_k (increasing) and b_k (decreasing).
// a_inf is the fixed point of theta_Gamma o theta_gamma, b_inf the fixed
// point of theta_gamma o theta_Gamma, and both have closed forms.

#include <stdexcept>
#include <vector>

#include "cfdim/ifs.hpp"
#include "cfdim/real.hpp"

namespace cfdim {

template <class Real>
struct InvariantInterval {
    Real a_inf, b_inf;
    std::vector<Real> a_seq;  // a_0 = 0, a_{k+1} = theta_Gamma(b_k)
    std::vector<Real> b_seq;  // b_0 = 1/gamma, b_{k+1} = theta_gamma(a_k)

    std::size_t depth() const { return a_seq.size() - 1; }

    // a_k / b_k, clamped to the stored depth (the sequences are constant to
    // working precision beyond the early-stop index).
    Real a(std::size_t k) const { return a_seq[k < a_seq.size() ? k : a_seq.size() - 1]; }
    Real b(std::size_t k) const { return b_seq[k < b_seq.size() ? k : b_seq.size() - 1]; }
};

// Closed forms plus the iterated sequence to the requested depth. The
// iteration stops early once consecutive a_k agree to full precision.
template <class Real>
InvariantInterval<Real> invariant_interval(const GaussIFS<Real>& ifs, std::size_t depth = 200) {
    using std::abs;
    using std::sqrt;
    if (!(ifs.gamma < ifs.Gamma))
        throw std::invalid_argument("invariant_interval: need gamma < Gamma");

    const Real g = ifs.gamma, G = ifs.Gamma;
    InvariantInterval<Real> inv;
    inv.a_inf = -g / 2 + sqrt((g / 2) * (g / 2) + g / G);
    inv.b_inf = (G / g) * inv.a_inf;

    inv.a_seq.reserve(depth + 1);
    inv.b_seq.reserve(depth + 1);
    inv.a_seq.push_back(Real(0));
    inv.b_seq.push_back(Real(1) / g);
    const Real stop = real_eps<Real>() * inv.a_inf;
    for (std::size_t k = 0; k < depth; ++k) {
        const Real a_k = inv.a_seq[k];
        const Real b_k = inv.b_seq[k];
        inv.a_seq.push_back(Real(1) / (b_k + G));
        inv.b_seq.push_back(Real(1) / (a_k + g));
        if (k > 0 && abs(inv.a_seq[k + 1] - a_k) < stop && abs(inv.b_seq[k + 1] - b_k) < stop)
            break;
    }
    return inv;
}

}  // namespace cfdim

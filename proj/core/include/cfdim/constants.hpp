#pragma once

// A-priori constants and the machine-checked hypothesis certificate. Every
// quantity here is a closed-form function of (s, r, nu, h, mu) and the
// invariant-interval data; the certificate evaluates the cone-mapping
// conditions and records pass/fail per condition. Comparisons carry an
// 8-ulp directed margin so rounding cannot turn a failed inequality into a
// pass.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfdim/ifs.hpp"
#include "cfdim/interval.hpp"
#include "cfdim/mesh.hpp"
#include "cfdim/real.hpp"

namespace cfdim {

// psi(r) = (2/pi) ln(r+1) + 3/4, the Lebesgue-constant bound for the
// extended Chebyshev basis.
template <class Real>
Real psi(int r) {
    using std::log;
    return (Real(2) / pi_const<Real>()) * log(Real(r + 1)) + Real(3) / 4;
}

// eta(r): half the largest node distance from the middle node, in units of
// the cell width.
template <class Real>
Real eta(int r) {
    using std::tan;
    if (r % 2 == 0) return Real(1) / 2;
    return (1 + tan(pi_const<Real>() / Real(2 * r + 2))) / 2;
}

// max_{|x|<=1} |prod_k (x - c_k)| = 2^{-r} (1/cos(pi/(2r+2)))^{r+1}.
template <class Real>
Real node_poly_max(int r) {
    using std::cos;
    if (r < 2) throw std::invalid_argument("node_poly_max: r must be >= 2");
    Real sec = Real(1) / cos(pi_const<Real>() / Real(2 * r + 2));
    return pow_int(sec, unsigned(r + 1)) / pow_int(Real(2), unsigned(r));
}

// m_{r+1} = node_poly_max(r) / (2^{r+1} (r+1)!), the interpolation-remainder
// coefficient.
template <class Real>
Real interp_remainder_coeff(int r) {
    Real fact(1);
    for (int j = 2; j <= r + 1; ++j) fact *= j;
    return node_poly_max<Real>(r) / (pow_int(Real(2), unsigned(r + 1)) * fact);
}

// chi = a_k + 1/b_inf; at k = infinity this is 2 a_inf + gamma.
template <class Real>
Real chi_constant(const InvariantInterval<Real>& inv, const Real& gamma, long k) {
    if (k < 0) return 2 * inv.a_inf + gamma;
    return inv.a(std::size_t(k)) + Real(1) / inv.b_inf;
}

// E(s,p) = (2s)(2s+1)...(2s+p-1) / chi^p, the derivative bound
// |v_s^(p)| / v_s on the invariant interval.
template <class Real>
Real E_bound(const Real& s, int p, const Real& chi) {
    if (p < 1) throw std::invalid_argument("E_bound: p must be >= 1");
    Real prod(1);
    for (int j = 0; j < p; ++j) prod *= 2 * s + j;
    return prod / pow_int(chi, unsigned(p));
}

// G_{r+1}: interpolation error coefficient,
//   2 exp(2sh/chi) [(2s)(2s+1)...(2s+r) / ((2)(4)...(2r+2))]
//     (1/chi)^{r+1} (1/(2 cos(pi/(2r+2))))^{r+1}.
template <class Real>
Real G_bound(const Real& s, int r, const Real& h, const Real& chi) {
    using std::cos;
    using std::exp;
    if (r < 2) throw std::invalid_argument("G_bound: r must be >= 2");
    Real ratio(1);
    for (int j = 0; j <= r; ++j) ratio *= (2 * s + j) / Real(2 * j + 2);
    Real sec = Real(1) / (2 * cos(pi_const<Real>() / Real(2 * r + 2)));
    return 2 * exp(2 * s * h / chi) * ratio * pow_int(Real(1) / chi, unsigned(r + 1)) *
           pow_int(sec, unsigned(r + 1));
}

// D_{r+1} = (1/sin(pi/(2r+2)))^2 G_{r+1};  H_{r+1} = mu D_{r+1} chi/(2s).
template <class Real>
void D_H_bounds(const Real& G, int r, const Real& mu, const Real& chi, const Real& s,
                Real& D_out, Real& H_out) {
    using std::sin;
    Real sn = sin(pi_const<Real>() / Real(2 * r + 2));
    D_out = G / (sn * sn);
    H_out = mu * D_out * chi / (2 * s);
}

// M1 = mu D h^r / (1 - G^2 h^{2r+2}) + 2s/chi,
// M2 = (2s/chi) [1 + H h^r/(1 - G^2 h^{2r+2})
//                  + (1 - h^2 (2s/(mu chi)) sin^2(pi/(2r+2)))^{-1}].
template <class Real>
void M1_M2(const Real& s, const Real& chi, const Real& mu, const Real& G, const Real& H,
           const Real& h, int r, Real& M1_out, Real& M2_out) {
    using std::sin;
    Real hr = pow_int(h, unsigned(r));
    Real g2 = G * G * pow_int(h, unsigned(2 * r + 2));
    if (!(g2 < 1)) throw std::domain_error("M1_M2: G^2 h^{2r+2} >= 1 (h too large)");
    Real sn = sin(pi_const<Real>() / Real(2 * r + 2));
    Real last_den = 1 - h * h * (2 * s / (mu * chi)) * sn * sn;
    if (!(last_den > 0)) throw std::domain_error("M1_M2: trailing denominator <= 0 (h too large)");
    Real D = H * (2 * s) / (mu * chi);  // recover D = H 2s/(mu chi)
    M1_out = mu * D * hr / (1 - g2) + 2 * s / chi;
    M2_out = (2 * s / chi) * (1 + H * hr / (1 - g2) + 1 / last_den);
}

struct CertificateChecks {
    bool cond_8_3 = false;      // psi(r) u e^u < 1
    bool cond_8_4 = false;      // kappa1 e^u / (1 - psi u e^u) < kappa2 - s M0/M
    bool cond_h1 = false;       // 2 + H (h^r + h^{2r+2}) + h^2 <= 2/(kappa2 - kappa1)
    bool M_gt_M2 = false;
    bool h_le_02 = false;       // h <= 0.2
    bool s_range = false;       // 0 < s <= 3/2
    bool chi_ge_1 = false;
    bool gap_condition = false;

    bool all() const {
        return cond_8_3 && cond_8_4 && cond_h1 && M_gt_M2 && h_le_02 && s_range && chi_ge_1 &&
               gap_condition;
    }
};

template <class Real>
struct HypothesisCertificate {
    Real s{0};
    int r = 0;
    int nu = 0;
    Real h{0}, mu{1};
    Real chi{0}, psi_r{0}, eta_r{0};
    Real c_nu{0}, M0_nu{0};
    Real kappa1{0}, kappa2{0};
    Real M{0}, M_prime{0};
    Real E{0}, G{0}, D{0}, H{0};
    Real M1{0}, M2{0};
    Real u{0};
    CertificateChecks checks;
    bool kappa1_warn = false;  // kappa1 above the practical 4/5 target
    bool verified = false;
    std::vector<std::string> reasons;  // populated when unverified
};

struct CertificateOptions {
    double kappa2_override = 0;  // 0: use (1 + kappa1)/2
};

namespace detail {
// a < b with an 8-ulp directed margin: rounding noise cannot create a pass.
template <class Real>
bool dir_less(const Real& a, const Real& b) {
    Real margin = 8 * real_eps<Real>() * (abs_val(a) + abs_val(b));
    return a + margin < b;
}
}  // namespace detail

// Evaluates every constant of the computation procedure at (s, r, nu, mesh)
// and checks the cone-mapping hypotheses. Never throws on a failed
// condition: an unverified certificate comes back with reasons.
template <class Real>
HypothesisCertificate<Real> build_certificate(const GaussIFS<Real>& ifs,
                                              const Mesh<Real>& mesh,
                                              const InvariantInterval<Real>& inv,
                                              const Real& s, int nu,
                                              const CertificateOptions& opts = {}) {
    using std::exp;
    using std::isnan;
    HypothesisCertificate<Real> cert;
    cert.s = s;
    cert.r = mesh.r;
    cert.nu = nu;
    cert.h = mesh.h;
    cert.mu = mesh.mu;
    cert.psi_r = psi<Real>(mesh.r);
    cert.eta_r = eta<Real>(mesh.r);
    cert.chi = chi_constant(inv, ifs.gamma, -1);
    cert.c_nu = contraction_bound(ifs, nu, inv.a_inf);
    const Real a_prev = inv.a(std::size_t(nu - 1));
    const Real m0_den = inv.a_inf + a_prev + ifs.gamma;
    cert.M0_nu = 2 / m0_den;

    cert.kappa1 = cert.c_nu * 2 * cert.eta_r * Real(mesh.r) * Real(mesh.r) * cert.psi_r;
    cert.kappa1_warn = cert.kappa1 > Real(4) / 5;
    cert.kappa2 = opts.kappa2_override > 0 ? Real(opts.kappa2_override) : (1 + cert.kappa1) / 2;

    cert.E = E_bound(s, mesh.r + 1, cert.chi);
    cert.G = G_bound(s, mesh.r, mesh.h, cert.chi);
    D_H_bounds(cert.G, mesh.r, cert.mu, cert.chi, s, cert.D, cert.H);

    cert.checks.h_le_02 = cert.h <= Real(1) / 5;
    if (!cert.checks.h_le_02) cert.reasons.push_back("h > 0.2");
    cert.checks.s_range = (s > 0) && (s <= Real(3) / 2);
    if (!cert.checks.s_range) cert.reasons.push_back("s outside (0, 3/2]");
    cert.checks.chi_ge_1 = cert.chi >= 1;
    if (!cert.checks.chi_ge_1) cert.reasons.push_back("chi < 1");
    cert.checks.gap_condition = true;  // enforced by build_mesh

    if (!(cert.kappa1 < 1) || !(cert.kappa2 > cert.kappa1) || !(cert.kappa2 < 1)) {
        cert.reasons.push_back("kappa1 >= 1 at this (r, nu); raise nu");
        return cert;  // M and the conditions are meaningless here
    }

    cert.M = (4 * s / m0_den) / (cert.kappa2 - cert.kappa1);
    cert.M_prime = cert.kappa2 * cert.M;
    cert.u = cert.M * cert.eta_r * cert.h;

    try {
        M1_M2(s, cert.chi, cert.mu, cert.G, cert.H, cert.h, mesh.r, cert.M1, cert.M2);
    } catch (const std::domain_error& e) {
        cert.reasons.push_back(e.what());
        return cert;
    }

    const Real eu = exp(cert.u);
    const Real lhs83 = cert.psi_r * cert.u * eu;
    cert.checks.cond_8_3 = detail::dir_less(lhs83, Real(1));
    if (!cert.checks.cond_8_3) cert.reasons.push_back("psi(r) u e^u >= 1");

    if (cert.checks.cond_8_3) {
        Real lhs84 = cert.kappa1 * eu / (1 - lhs83);
        Real rhs84 = cert.kappa2 - s * cert.M0_nu / cert.M;
        cert.checks.cond_8_4 = detail::dir_less(lhs84, rhs84);
        if (!cert.checks.cond_8_4) cert.reasons.push_back("kappa1 e^u/(1 - psi u e^u) >= kappa2 - s M0/M");
    } else {
        cert.reasons.push_back("cond (8.4) not evaluated");
    }

    Real hr = pow_int(cert.h, unsigned(mesh.r));
    Real lhs_h1 = 2 + cert.H * (hr + pow_int(cert.h, unsigned(2 * mesh.r + 2))) + cert.h * cert.h;
    cert.checks.cond_h1 = detail::dir_less(lhs_h1, 2 / (cert.kappa2 - cert.kappa1));
    if (!cert.checks.cond_h1) cert.reasons.push_back("2 + H(h^r + h^{2r+2}) + h^2 > 2/(kappa2 - kappa1)");

    cert.checks.M_gt_M2 = detail::dir_less(cert.M2, cert.M);
    if (!cert.checks.M_gt_M2) cert.reasons.push_back("M <= M2");

    cert.verified = cert.checks.all();
    return cert;
}

}  // namespace cfdim

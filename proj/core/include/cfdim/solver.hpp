#pragma once

// Locates s with rho(L_{s,nu})^{1/nu} = 1 and converts it into a rigorous
// bracket [s_l, s_u]: s_u satisfies rho_hi(s_u) < 1 - H h^r and s_l
// satisfies rho_lo(s_l) > 1 + H h^r, where (rho_lo, rho_hi) is the certified
// cone enclosure at each trial s. The spectral radius is strictly
// decreasing in s, so the bracket contains the dimension.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfdim/constants.hpp"
#include "cfdim/matrix.hpp"
#include "cfdim/real.hpp"

namespace cfdim {

struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class Real>
struct TraceEntry {
    std::string phase;
    Real s{0};
    Real rho_lo{0}, rho_hi{0};
    std::size_t power_iterations = 0;
};

template <class Real>
struct SolverOptions {
    Real s_min{0};
    Real s_max{Real(3) / 2};
    Real tol{0};                 // absolute tolerance in s; 0 = bracket width / 100
    bool force_heuristic = false;
    Real H_override{-1};         // >= 0 replaces the certified H (tests, degenerate mode)
    std::size_t max_power_iters = 4000;
    CertificateOptions cert;
};

// Everything a rho evaluation needs, plus the evaluation log.
template <class Real>
struct Pipeline {
    const GaussIFS<Real>& ifs;
    const InvariantInterval<Real>& inv;
    const Mesh<Real>& mesh;
    const WordTable<Real>& words;
    std::vector<TraceEntry<Real>> trace;

    Pipeline(const GaussIFS<Real>& i, const InvariantInterval<Real>& v, const Mesh<Real>& m,
             const WordTable<Real>& w)
        : ifs(i), inv(v), mesh(m), words(w) {}

    HypothesisCertificate<Real> certificate(const Real& s, const CertificateOptions& opts) const {
        return build_certificate(ifs, mesh, inv, s, int(words.nu), opts);
    }

    // Cone parameter for the enclosure: the certificate M when it exists,
    // otherwise a positive stand-in (the enclosure machinery only needs
    // some M > 0; rigor is tracked by the verified flag).
    Real cone_M(const HypothesisCertificate<Real>& cert) const {
        if (cert.M > 0) return cert.M;
        return std::max(Real(1), 4 * cert.s / cert.chi);
    }

    RhoEnclosure<Real> rho(const Real& s, const Real& tol_rel, const char* phase,
                           const SolverOptions<Real>& opts) {
        auto cert = certificate(s, opts.cert);
        auto mat = assemble(ifs, mesh, words, s);
        auto enc = certified_rho(mat, cone_M(cert), tol_rel, opts.max_power_iters);
        trace.push_back({phase, s, enc.lo, enc.hi, enc.iterations});
        return enc;
    }
};

template <class Real>
struct RootResult {
    Real s_mid{0};
    Real slope{1};  // |d(rho^{1/nu})/ds| estimate near the root
};

namespace detail {
template <class Real>
Real nu_root(const Real& x, int nu) {
    using std::exp;
    using std::log;
    if (nu == 1) return x;
    return exp(log(x) / nu);
}
}  // namespace detail

// Bisection on [s_min, s_max] (phi(s) = rho^{1/nu} - 1 is strictly
// decreasing), refined by bracket-safeguarded secant steps once the bracket
// is within 1e-3.
template <class Real>
RootResult<Real> rho_root(Pipeline<Real>& pipe, const SolverOptions<Real>& opts) {
    const int nu = int(pipe.words.nu);
    const Real coarse_tol = std::max(Real(1e-8), 100 * real_eps<Real>());

    auto phi = [&](const Real& s, const Real& tol_rel, const char* phase) {
        return detail::nu_root(pipe.rho(s, tol_rel, phase, opts).mid(), nu) - 1;
    };

    Real lo = opts.s_min, hi = opts.s_max;
    Real phi_lo, phi_hi;
    if (lo == 0) {
        phi_lo = Real(double(pipe.ifs.size())) - 1;  // rho(0)^{1/nu} = n exactly
    } else {
        phi_lo = phi(lo, coarse_tol, "bisect");
    }
    phi_hi = phi(hi, coarse_tol, "bisect");
    if (!(phi_lo > 0))
        throw solver_error("rho_root: rho^{1/nu} <= 1 at the lower end of the search range");
    if (!(phi_hi < 0))
        throw solver_error("rho_root: rho^{1/nu} > 1 at s_max; dimension outside supported range");

    while (hi - lo > Real(1e-3)) {
        Real mid = (lo + hi) / 2;
        Real pm = phi(mid, coarse_tol, "bisect");
        if (pm > 0) {
            lo = mid;
            phi_lo = pm;
        } else {
            hi = mid;
            phi_hi = pm;
        }
    }

    Real slope = (phi_lo - phi_hi) / (hi - lo);
    // tolerance targets: the certified bracket dominates the error budget,
    // so drive the root two orders below the expected bracket width
    auto cert0 = pipe.certificate((lo + hi) / 2, opts.cert);
    Real H_est = opts.H_override >= 0 ? opts.H_override : cert0.H;
    Real hr = pow_int(pipe.mesh.h, unsigned(pipe.mesh.r));
    Real width_est = 2 * H_est * hr / (nu * std::max(slope, Real(1e-3)));
    Real tol_floor = 16 * real_eps<Real>() * std::max(Real(1), abs_val(lo));
    Real tol_s = opts.tol > 0 ? opts.tol : std::max(width_est / 100, tol_floor);
    Real tol_rho = std::max(Real(100) * real_eps<Real>(), tol_s * nu * std::max(slope, Real(1e-3)) / 8);

    // Illinois-safeguarded regula falsi: shrinks the bracket from both sides
    Real fl = phi_lo, fh = phi_hi;
    int side = 0;
    for (int it = 0; it < 200 && hi - lo > tol_s; ++it) {
        Real cand = (lo * fh - hi * fl) / (fh - fl);
        if (!(cand > lo && cand < hi)) cand = (lo + hi) / 2;
        Real fc = phi(cand, tol_rho, "secant");
        if (fc > 0) {
            lo = cand;
            fl = fc;
            if (side == 1) fh /= 2;
            side = 1;
        } else if (fc < 0) {
            hi = cand;
            fh = fc;
            if (side == -1) fl /= 2;
            side = -1;
        } else {
            lo = hi = cand;
            break;
        }
    }

    RootResult<Real> res;
    res.s_mid = (lo + hi) / 2;
    res.slope = std::max(slope, Real(1e-6));
    return res;
}

template <class Real>
struct DimensionBracket {
    Real s_l{0}, s_u{0}, s_mid{0};
    Real H{0}, h{0};
    int r = 0, nu = 0;
    RhoEnclosure<Real> rho_at_sl, rho_at_su;
    bool verified = false;
    int digits_guaranteed = 0;
};

// Expands outward from s_mid until the certified enclosures clear the
// 1 -+ H h^r thresholds, then bisects inward; the returned endpoints are the
// certified passing trial points.
template <class Real>
DimensionBracket<Real> certify_bracket(Pipeline<Real>& pipe, const RootResult<Real>& root,
                                       const SolverOptions<Real>& opts) {
    using std::floor;
    using std::log10;
    const int nu = int(pipe.words.nu);
    const Real hr = pow_int(pipe.mesh.h, unsigned(pipe.mesh.r));
    const Real s_mid = root.s_mid;

    auto cert_mid = pipe.certificate(s_mid, opts.cert);
    const Real H_mid = opts.H_override >= 0 ? opts.H_override : cert_mid.H;
    auto H_at = [&](const Real& s) {
        if (opts.H_override >= 0) return opts.H_override;
        Real D, H;
        Real G = G_bound(s, pipe.mesh.r, pipe.mesh.h, cert_mid.chi);
        D_H_bounds(G, pipe.mesh.r, pipe.mesh.mu, cert_mid.chi, s, D, H);
        return H;
    };

    const Real tol_floor = std::max(opts.tol, 16 * real_eps<Real>() * std::max(Real(1), s_mid));
    const Real delta_unit = std::max(H_mid * hr / (nu * root.slope), tol_floor);
    const Real tol_bisect = std::max(delta_unit / 64, tol_floor);
    const Real tol_rho =
        std::max(Real(100) * real_eps<Real>(),
                 std::max(H_mid * hr / 64, tol_floor * nu * root.slope / 8));

    auto upper_pass = [&](const Real& s, RhoEnclosure<Real>& enc) {
        enc = pipe.rho(s, tol_rho, "bracket-upper", opts);
        return enc.hi < 1 - H_at(s) * hr;
    };
    auto lower_pass = [&](const Real& s, RhoEnclosure<Real>& enc) {
        enc = pipe.rho(s, tol_rho, "bracket-lower", opts);
        return enc.lo > 1 + H_at(s) * hr;
    };

    DimensionBracket<Real> br;
    br.s_mid = s_mid;
    br.H = H_mid;
    br.h = pipe.mesh.h;
    br.r = pipe.mesh.r;
    br.nu = nu;

    // upper endpoint
    {
        Real fail = s_mid, trial = s_mid + Real(5) / 4 * delta_unit;
        RhoEnclosure<Real> enc;
        int guard = 0;
        while (!upper_pass(trial, enc)) {
            fail = trial;
            trial = s_mid + 2 * (trial - s_mid);
            if (trial > opts.s_max || ++guard > 60)
                throw solver_error(
                    "certify_bracket: cannot satisfy rho_hi < 1 - H h^r below s_max; H h^r too "
                    "large, use smaller h or larger r");
        }
        RhoEnclosure<Real> enc_pass = enc;
        while (trial - fail > tol_bisect) {
            Real mid = (fail + trial) / 2;
            if (upper_pass(mid, enc)) {
                trial = mid;
                enc_pass = enc;
            } else {
                fail = mid;
            }
        }
        br.s_u = trial;
        br.rho_at_su = enc_pass;
    }

    // lower endpoint
    {
        Real fail = s_mid, trial = s_mid - Real(5) / 4 * delta_unit;
        RhoEnclosure<Real> enc;
        int guard = 0;
        while (!lower_pass(trial, enc)) {
            fail = trial;
            trial = s_mid - 2 * (s_mid - trial);
            if (trial < opts.s_min || ++guard > 60)
                throw solver_error(
                    "certify_bracket: cannot satisfy rho_lo > 1 + H h^r above s_min; H h^r too "
                    "large, use smaller h or larger r");
        }
        RhoEnclosure<Real> enc_pass = enc;
        while (fail - trial > tol_bisect) {
            Real mid = (fail + trial) / 2;
            if (lower_pass(mid, enc)) {
                trial = mid;
                enc_pass = enc;
            } else {
                fail = mid;
            }
        }
        br.s_l = trial;
        br.rho_at_sl = enc_pass;
    }

    bool endpoint_certs_ok = pipe.certificate(br.s_l, opts.cert).verified &&
                             pipe.certificate(br.s_u, opts.cert).verified;
    br.verified = cert_mid.verified && endpoint_certs_ok && !opts.force_heuristic &&
                  !(opts.H_override >= 0);
    Real width = br.s_u - br.s_l;
    if (width > 0) {
        double lg = static_cast<double>(log10(width));
        br.digits_guaranteed = int(std::floor(-lg));
    }
    return br;
}

}  // namespace cfdim

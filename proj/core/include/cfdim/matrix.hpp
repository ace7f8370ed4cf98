#pragma once

// Collocation matrix of the nu-times-iterated transfer operator, the
// log-Lipschitz cone K_M on the node set, cone-normalized power iteration,
// and the rigorous spectral-radius enclosure. The enclosure rests on the
// cone-comparison inequality alpha w <=_K (L w) <=_K beta w  =>
// alpha <= rho(L) <= beta, which holds however w was produced, so the power
// iteration itself needs no error analysis.

#include <cstddef>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfdim/constants.hpp"
#include "cfdim/ifs.hpp"
#include "cfdim/mesh.hpp"
#include "cfdim/parallel.hpp"
#include "cfdim/real.hpp"

namespace cfdim {

struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class Real>
struct CollocationMatrix {
    std::size_t Q = 0;
    std::vector<Real> entries;  // row-major Q x Q
    std::vector<Real> nodes;    // sorted node coordinates (cone geometry)
    Real s{0};
    int nu = 0;

    Real& at(std::size_t row, std::size_t col) { return entries[row * Q + col]; }
    const Real& at(std::size_t row, std::size_t col) const { return entries[row * Q + col]; }
};

// (L g)(xi_p) = sum_omega g_omega(xi_p)^s F(theta_omega(xi_p)), with F the
// piecewise interpolant through the node values. Words are visited in fixed
// lexicographic order and each row accumulates independently, so entries do
// not depend on the thread count.
template <class Real>
CollocationMatrix<Real> assemble(const GaussIFS<Real>& ifs, const Mesh<Real>& mesh,
                                 const WordTable<Real>& words, const Real& s) {
    CollocationMatrix<Real> mat;
    mat.Q = mesh.Q;
    mat.s = s;
    mat.nu = int(words.nu);
    mat.nodes = mesh.nodes;
    mat.entries.assign(mesh.Q * mesh.Q, Real(0));

    const int r = mesh.r;
    parallel_rows<Real>(mesh.Q, [&](std::size_t row_lo, std::size_t row_hi) {
        std::vector<Real> basis(r + 1);
        for (std::size_t p = row_lo; p < row_hi; ++p) {
            const Real xi = mesh.nodes[p];
            Real* row = &mat.entries[p * mesh.Q];
            for (const auto& c : words.coeffs) {
                const Real y = theta_omega(c, xi);
                const Real wgt = weight(c, xi, s);
                const CellRef cell = locate(mesh, y);
                const MeshInterval<Real>& iv = mesh.intervals[cell.interval];
                Real x_hat = 2 * (y - (iv.a + Real(cell.cell) * iv.h)) / iv.h - 1;
                x_hat = std::min(Real(1), std::max(Real(-1), x_hat));
                basis_values(mesh, x_hat, basis.data());
                const std::size_t base = mesh.node_index(cell.interval, cell.cell, 0);
                for (int k = 0; k <= r; ++k) row[base + k] += wgt * basis[k];
            }
        }
    });
    return mat;
}

template <class Real>
void matvec(const CollocationMatrix<Real>& mat, const std::vector<Real>& v, std::vector<Real>& out) {
    out.assign(mat.Q, Real(0));
    parallel_rows<Real>(mat.Q, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const Real* row = &mat.entries[p * mat.Q];
            Real acc(0);
            for (std::size_t q = 0; q < mat.Q; ++q) acc += row[q] * v[q];
            out[p] = acc;
        }
    });
}

// Membership in K_M: all entries zero, or all strictly positive with
// F(xi) <= exp(M |xi - eta|) F(eta) for consecutive nodes (consecutive pairs
// suffice because the bound is multiplicative along chains). Comparisons
// allow 16 ulp of slack so exact boundary vectors are inside.
template <class Real>
bool cone_contains(const std::vector<Real>& values, const Real& M, const std::vector<Real>& nodes) {
    using std::exp;
    using std::isnan;
    if (values.size() != nodes.size() || values.empty()) return false;
    bool all_zero = true;
    for (const Real& v : values) {
        if (isnan(v) || v < 0) return false;
        if (v != 0) all_zero = false;
    }
    if (all_zero) return true;
    for (const Real& v : values)
        if (v == 0) return false;
    const Real slack = 1 + 16 * real_eps<Real>();
    for (std::size_t p = 0; p + 1 < values.size(); ++p) {
        const Real e = exp(M * (nodes[p + 1] - nodes[p]));
        if (values[p] > e * values[p + 1] * slack) return false;
        if (values[p + 1] > e * values[p] * slack) return false;
    }
    return true;
}

template <class Real>
struct PowerResult {
    Real lambda_hat{0};
    std::vector<Real> w;    // final iterate (before the last multiply)
    std::vector<Real> Aw;   // matrix * w
    Real ratio_spread{0};
    std::size_t iterations = 0;
    bool converged = false;
    bool cone_ok = false;
};

namespace detail {

// Double-precision pre-iteration: burns off the transient cheaply before
// full-precision refinement. Starts from the all-ones vector like the main
// loop, so the overall start vector is still 1.
template <class Real>
bool power_prestage(const CollocationMatrix<Real>& mat, std::vector<Real>& v_out) {
    const std::size_t Q = mat.Q;
    std::vector<double> m(Q * Q), v(Q, 1.0), u(Q);
    for (std::size_t i = 0; i < Q * Q; ++i) {
        m[i] = static_cast<double>(mat.entries[i]);
        if (!std::isfinite(m[i])) return false;
    }
    for (int it = 0; it < 600; ++it) {
        for (std::size_t p = 0; p < Q; ++p) {
            double acc = 0;
            const double* row = &m[p * Q];
            for (std::size_t q = 0; q < Q; ++q) acc += row[q] * v[q];
            u[p] = acc;
        }
        double rmin = std::numeric_limits<double>::infinity(), rmax = 0, umax = 0;
        for (std::size_t p = 0; p < Q; ++p) {
            if (!(u[p] > 0) || !(v[p] > 0)) return false;
            double ratio = u[p] / v[p];
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
            umax = std::max(umax, u[p]);
        }
        if (!std::isfinite(umax) || umax <= 0) return false;
        for (std::size_t p = 0; p < Q; ++p) v[p] = u[p] / umax;
        if (rmax - rmin <= 1e-13 * rmax) break;
    }
    for (std::size_t p = 0; p < Q; ++p) v_out[p] = Real(v[p]);
    return true;
}

}  // namespace detail

// Power iteration in the max norm from the all-ones start vector (which
// lies in K_M for every M >= 0), stopping when the Collatz-Wielandt ratio
// spread drops below tol * lambda_hat.
template <class Real>
PowerResult<Real> power_iterate(const CollocationMatrix<Real>& mat, const Real& M, const Real& tol,
                                std::size_t max_iters = 4000) {
    const std::size_t Q = mat.Q;
    PowerResult<Real> res;
    res.w.assign(Q, Real(1));
    if constexpr (!std::is_same_v<Real, double>) {
        std::vector<Real> pre(Q);
        if (detail::power_prestage(mat, pre)) res.w = std::move(pre);
    }

    std::vector<Real> u;
    for (std::size_t it = 0; it < max_iters; ++it) {
        matvec(mat, res.w, u);
        Real rmin = u[0] / res.w[0], rmax = rmin, umax(0);
        bool positive = true;
        for (std::size_t p = 0; p < Q; ++p) {
            if (!(u[p] > 0)) {
                positive = false;
                break;
            }
            Real ratio = u[p] / res.w[p];
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
            umax = std::max(umax, u[p]);
        }
        res.iterations = it + 1;
        if (!positive) {
            res.converged = false;
            res.Aw = u;
            return res;
        }
        res.lambda_hat = (rmax + rmin) / 2;
        res.ratio_spread = rmax - rmin;
        res.Aw = u;
        if (res.ratio_spread <= tol * res.lambda_hat) {
            res.converged = true;
            break;
        }
        for (std::size_t p = 0; p < Q; ++p) res.w[p] = u[p] / umax;
    }
    res.cone_ok = cone_contains(res.w, M, mat.nodes);
    return res;
}

// Rigorous cone-order bounds: the largest alpha and smallest beta with
// alpha w <=_K A w <=_K beta w. Every nonnegativity and consecutive-pair
// constraint is linear in alpha (resp. beta); each is solved in closed form
// and the results intersected, with a per-constraint rounding allowance
// pushed in the safe direction.
template <class Real>
void cone_order_bounds(const CollocationMatrix<Real>& mat, const std::vector<Real>& w,
                       const std::vector<Real>& u, const Real& M, Real& alpha_out, Real& beta_out) {
    using std::exp;
    const std::size_t Q = mat.Q;
    if (w.size() != Q || u.size() != Q)
        throw std::invalid_argument("cone_order_bounds: size mismatch");
    const Real eps = real_eps<Real>();

    Real alpha_hi = std::numeric_limits<Real>::infinity();  // min of upper bounds
    Real alpha_lo = -std::numeric_limits<Real>::infinity();
    Real beta_lo = -std::numeric_limits<Real>::infinity();  // max of lower bounds
    Real beta_hi = std::numeric_limits<Real>::infinity();

    for (std::size_t p = 0; p < Q; ++p) {
        if (!(w[p] > 0)) throw std::invalid_argument("cone_order_bounds: w must be strictly positive");
        Real ratio = u[p] / w[p];
        Real adj = 4 * eps * abs_val(ratio);
        alpha_hi = std::min(alpha_hi, ratio - adj);
        beta_lo = std::max(beta_lo, ratio + adj);
    }

    auto process_pair = [&](std::size_t p, std::size_t q, const Real& e) {
        // constraint family: A <= t B with A = u_p - e u_q, B = w_p - e w_q;
        // alpha needs A <= alpha B, beta needs beta B <= A
        Real A = u[p] - e * u[q];
        Real B = w[p] - e * w[q];
        Real errA = 2 * eps * (abs_val(u[p]) + e * abs_val(u[q]));
        Real errB = 2 * eps * (abs_val(w[p]) + e * abs_val(w[q]));
        if (B < -errB) {
            Real cand = A / B;
            Real err = (errA + abs_val(cand) * errB) / (-B - errB);
            alpha_hi = std::min(alpha_hi, cand - err);
            beta_lo = std::max(beta_lo, cand + err);
        } else if (B > errB) {
            // w effectively violates its own cone constraint here
            Real cand = A / B;
            Real err = (errA + abs_val(cand) * errB) / (B - errB);
            alpha_lo = std::max(alpha_lo, cand + err);
            beta_hi = std::min(beta_hi, cand - err);
        } else {
            // B indistinguishable from 0: constraint is alpha-free
            if (A > errA) alpha_lo = std::numeric_limits<Real>::infinity();
            if (A < -errA) beta_hi = -std::numeric_limits<Real>::infinity();
        }
    };

    for (std::size_t p = 0; p + 1 < Q; ++p) {
        const Real e = exp(M * (mat.nodes[p + 1] - mat.nodes[p]));
        process_pair(p, p + 1, e);
        process_pair(p + 1, p, e);
    }

    if (!(alpha_lo <= alpha_hi) || !(beta_lo <= beta_hi))
        throw convergence_error(
            "cone_order_bounds: empty feasible set; w is too far from the eigenvector, run more "
            "power iterations");
    alpha_out = alpha_hi;
    beta_out = beta_lo;
}

template <class Real>
struct RhoEnclosure {
    Real lo{0}, hi{0};
    std::size_t iterations = 0;
    Real spread{0};
    bool cone_ok = false;

    Real mid() const { return (lo + hi) / 2; }
    Real width() const { return hi - lo; }
};

// Power iteration followed by the rigorous cone-order bounds, retried with a
// tighter spread target until beta - alpha <= tol * beta.
template <class Real>
RhoEnclosure<Real> certified_rho(const CollocationMatrix<Real>& mat, const Real& M, const Real& tol,
                                 std::size_t max_iters = 4000) {
    Real spread_tol = tol / 4;
    const Real floor_tol = 64 * real_eps<Real>();
    if (spread_tol < floor_tol) spread_tol = floor_tol;

    std::string last_err;
    for (int attempt = 0; attempt < 4; ++attempt) {
        PowerResult<Real> pw = power_iterate(mat, M, spread_tol, max_iters);
        if (!pw.converged) {
            std::ostringstream os;
            os << "certified_rho: power iteration did not reach spread " << to_decimal_string(spread_tol)
               << " within " << pw.iterations << " iterations (achieved "
               << to_decimal_string(pw.ratio_spread) << ")";
            throw convergence_error(os.str());
        }
        try {
            RhoEnclosure<Real> enc;
            cone_order_bounds(mat, pw.w, pw.Aw, M, enc.lo, enc.hi);
            enc.iterations = pw.iterations;
            enc.spread = pw.ratio_spread;
            enc.cone_ok = pw.cone_ok;
            if (enc.width() <= tol * enc.hi) {
                if (!pw.cone_ok)
                    throw convergence_error("certified_rho: converged iterate is not in K_M");
                return enc;
            }
            last_err = "enclosure width " + to_decimal_string(enc.width()) + " above tolerance";
        } catch (const convergence_error& e) {
            last_err = e.what();
        }
        spread_tol = std::max(floor_tol, spread_tol / 64);
        max_iters *= 2;
    }
    throw convergence_error("certified_rho: " + last_err);
}

// Text dump: Q on the first line, then row-major entries one per line at
// full working precision (for external eigensolver cross-checks).
template <class Real>
void dump_matrix(const CollocationMatrix<Real>& mat, std::ostream& os) {
    os << mat.Q << "\n";
    for (const Real& e : mat.entries) os << to_decimal_string(e) << "\n";
}

}  // namespace cfdim

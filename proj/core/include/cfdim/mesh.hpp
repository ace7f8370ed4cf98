#pragma once

// Piecewise extended-Chebyshev collocation mesh. The working domain is a
// union of disjoint closed intervals [a_i, b_i] (images of the invariant
// interval under words of length nu'), each split into N_i equal cells of
// width h_i = (b_i - a_i)/N_i with r+1 extended Chebyshev nodes per cell.
// Cell endpoints are shared between neighbouring cells, so the global node
// count is Q = N r + I.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfdim/ifs.hpp"
#include "cfdim/interval.hpp"
#include "cfdim/real.hpp"

namespace cfdim {

struct mesh_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Extended Chebyshev points on [-1,1]:
//   c_k = -cos((2k+1)pi/(2r+2)) / cos(pi/(2r+2)),  k = 0..r.
// Endpoints are exactly -1/+1 and the set is antisymmetric; both properties
// are enforced exactly.
template <class Real>
std::vector<Real> chebyshev_reference_nodes(int r) {
    using std::cos;
    if (r < 1) throw std::invalid_argument("chebyshev_reference_nodes: r must be >= 1");
    const Real pi = pi_const<Real>();
    const Real denom = cos(pi / Real(2 * r + 2));
    std::vector<Real> c(r + 1);
    for (int k = 0; 2 * k < r; ++k) {
        Real v = -cos(Real(2 * k + 1) * pi / Real(2 * r + 2)) / denom;
        c[k] = v;
        c[r - k] = -v;
    }
    if (r % 2 == 0) c[r / 2] = Real(0);
    c[0] = Real(-1);
    c[r] = Real(1);
    return c;
}

template <class Real>
struct Subinterval {
    Real a, b;
};

namespace detail {
template <class Real>
Real round_down_1ulp(const Real& x) {
    return x - abs_val(x) * real_eps<Real>();
}
template <class Real>
Real round_up_1ulp(const Real& x) {
    return x + abs_val(x) * real_eps<Real>();
}
}  // namespace detail

// Images of [a_inf, b_inf] under all words of length nu', swept left to
// right with a deterministic merge rule: an image is merged into its
// predecessor (absorbing the gap) when the gap would violate the mesh gap
// condition at h_target, or when the image is shorter than h_target/mu_cap.
// Merged intervals are supersets of the images, so containment of every
// theta_omega([a_inf, b_inf]) with |omega| >= nu' is preserved.
template <class Real>
std::vector<Subinterval<Real>> build_subintervals(const GaussIFS<Real>& ifs,
                                                  std::size_t nu_prime,
                                                  const InvariantInterval<Real>& inv,
                                                  int r,
                                                  const Real& mu_cap,
                                                  const Real& h_target) {
    using std::sin;
    if (mu_cap < 1) throw std::invalid_argument("build_subintervals: mu_cap must be >= 1");
    if (!(h_target > 0)) throw std::invalid_argument("build_subintervals: h_target must be > 0");
    if (nu_prime == 0)
        return {Subinterval<Real>{inv.a_inf, inv.b_inf}};

    WordTable<Real> words(ifs, nu_prime);
    std::vector<Subinterval<Real>> images;
    images.reserve(words.count);
    for (const auto& c : words.coeffs) {
        Real ya = theta_omega(c, inv.a_inf);
        Real yb = theta_omega(c, inv.b_inf);
        if (yb < ya) std::swap(ya, yb);
        images.push_back({detail::round_down_1ulp(ya), detail::round_up_1ulp(yb)});
    }
    std::sort(images.begin(), images.end(),
              [](const Subinterval<Real>& u, const Subinterval<Real>& v) { return u.a < v.a; });

    const Real pi = pi_const<Real>();
    Real sn = sin(pi / Real(2 * r + 2));
    const Real gap_min = sn * sn * h_target;
    const Real len_min = h_target / mu_cap;

    std::vector<Subinterval<Real>> out;
    for (const auto& img : images) {
        if (out.empty()) {
            out.push_back(img);
            continue;
        }
        Subinterval<Real>& prev = out.back();
        const Real gap = img.a - prev.b;
        if (gap < gap_min || (img.b - img.a) < len_min) {
            if (img.b > prev.b) prev.b = img.b;
        } else {
            out.push_back(img);
        }
    }
    // the first interval has no predecessor; if it came out too short, fold
    // it into its successor
    while (out.size() >= 2 && (out[0].b - out[0].a) < len_min) {
        out[0].b = out[1].b;
        out.erase(out.begin() + 1);
    }
    return out;
}

template <class Real>
struct MeshInterval {
    Real a, b;
    std::size_t cells;       // N_i
    Real h;                  // (b - a)/N_i
    std::size_t node_base;   // global index of the node at a
};

// locate() result: interval index and 0-based cell index.
struct CellRef {
    std::size_t interval;
    std::size_t cell;
};

template <class Real>
struct Mesh {
    int r = 0;
    std::size_t Q = 0;
    Real h{0}, h_min{0}, mu{1};
    std::vector<MeshInterval<Real>> intervals;
    std::vector<Real> nodes;      // globally sorted, shared endpoints stored once
    std::vector<Real> ref_nodes;  // extended Chebyshev points on [-1,1]
    std::vector<Real> bary_w;     // barycentric weights for ref_nodes

    std::size_t node_index(std::size_t i, std::size_t j, std::size_t k) const {
        return intervals[i].node_base + j * std::size_t(r) + k;
    }

    Real cell_start(std::size_t i, std::size_t j) const {
        return nodes[node_index(i, j, 0)];
    }

    std::size_t total_cells() const {
        std::size_t n = 0;
        for (const auto& iv : intervals) n += iv.cells;
        return n;
    }
};

template <class Real>
Mesh<Real> build_mesh(const std::vector<Subinterval<Real>>& subs, int r, const Real& h_target) {
    using std::ceil;
    using std::sin;
    if (r < 2) throw std::invalid_argument("build_mesh: r must be >= 2");
    if (!(h_target > 0)) throw std::invalid_argument("build_mesh: h_target must be > 0");
    if (subs.empty()) throw std::invalid_argument("build_mesh: no subintervals");
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!(subs[i].a < subs[i].b))
            throw std::invalid_argument("build_mesh: empty or reversed subinterval");
        if (i > 0 && !(subs[i - 1].b < subs[i].a))
            throw std::invalid_argument("build_mesh: subintervals must be disjoint and ordered");
    }

    Mesh<Real> mesh;
    mesh.r = r;
    mesh.ref_nodes = chebyshev_reference_nodes<Real>(r);
    mesh.bary_w.assign(r + 1, Real(1));
    for (int k = 0; k <= r; ++k) {
        Real w(1);
        for (int l = 0; l <= r; ++l)
            if (l != k) w *= mesh.ref_nodes[k] - mesh.ref_nodes[l];
        mesh.bary_w[k] = Real(1) / w;
    }

    for (const auto& s : subs) {
        MeshInterval<Real> iv;
        iv.a = s.a;
        iv.b = s.b;
        Real len = s.b - s.a;
        Real ratio = len / h_target;
        Real cells_real = ceil(ratio);
        iv.cells = std::size_t(std::max(1.0, static_cast<double>(cells_real)));
        iv.h = len / Real(iv.cells);
        iv.node_base = mesh.nodes.size();
        for (std::size_t j = 0; j < iv.cells; ++j) {
            Real t0 = iv.a + Real(j) * iv.h;
            for (int k = 0; k < r; ++k)
                mesh.nodes.push_back(t0 + iv.h * (1 + mesh.ref_nodes[k]) / 2);
        }
        mesh.nodes.push_back(iv.b);
        mesh.intervals.push_back(iv);
    }
    mesh.Q = mesh.nodes.size();

    mesh.h = mesh.intervals.front().h;
    mesh.h_min = mesh.h;
    for (const auto& iv : mesh.intervals) {
        mesh.h = std::max(mesh.h, iv.h);
        mesh.h_min = std::min(mesh.h_min, iv.h);
    }
    mesh.mu = mesh.h / mesh.h_min;

    for (std::size_t p = 1; p < mesh.Q; ++p)
        if (!(mesh.nodes[p - 1] < mesh.nodes[p]))
            throw mesh_error("build_mesh: nodes not strictly increasing (precision too low for this h)");

    // gap condition of the cone estimates: sin^2(pi/(2r+2)) h_i <= a_{i+1} - b_i
    const Real pi = pi_const<Real>();
    Real sn = sin(pi / Real(2 * r + 2));
    for (std::size_t i = 0; i + 1 < mesh.intervals.size(); ++i) {
        Real gap = mesh.intervals[i + 1].a - mesh.intervals[i].b;
        if (!(sn * sn * mesh.intervals[i].h <= gap))
            throw mesh_error(
                "build_mesh: interval gap below sin^2(pi/(2r+2))*h_i; merge intervals "
                "(increase mu_cap or decrease nu')");
    }
    return mesh;
}

// Interval and cell containing x. Points within 4 ulp of the domain are
// clamped; anything further out signals a containment violation.
template <class Real>
CellRef locate(const Mesh<Real>& mesh, const Real& x) {
    const Real scale = std::max(abs_val(x), abs_val(mesh.intervals.back().b));
    const Real tol = 4 * real_eps<Real>() * scale;

    // binary search for the last interval with a_i <= x (+tol)
    std::size_t lo = 0, hi = mesh.intervals.size();
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (mesh.intervals[mid].a <= x + tol)
            lo = mid;
        else
            hi = mid;
    }
    const MeshInterval<Real>& iv = mesh.intervals[lo];
    if (x < iv.a - tol || x > iv.b + tol)
        throw std::domain_error("locate: point outside every subinterval (containment violated)");

    Real xc = std::min(std::max(x, iv.a), iv.b);
    Real pos_r = (xc - iv.a) / iv.h;
    double pos = static_cast<double>(pos_r);
    std::size_t j = pos <= 0 ? 0 : std::min(iv.cells - 1, std::size_t(pos));
    // exact adjustment against stored cell boundaries; ties go to the left cell
    while (j > 0 && xc <= mesh.cell_start(lo, j)) --j;
    while (j + 1 < iv.cells && xc > mesh.cell_start(lo, j + 1)) ++j;
    return CellRef{lo, j};
}

// All r+1 Lagrange basis values at reference coordinate x_hat (barycentric
// second form). Exact Kronecker delta when x_hat hits a node.
template <class Real>
void basis_values(const Mesh<Real>& mesh, const Real& x_hat, Real* out) {
    const int r = mesh.r;
    for (int k = 0; k <= r; ++k) {
        Real d = x_hat - mesh.ref_nodes[k];
        if (d == 0) {
            for (int l = 0; l <= r; ++l) out[l] = Real(l == k ? 1 : 0);
            return;
        }
        out[k] = mesh.bary_w[k] / d;
    }
    Real sum(0);
    for (int k = 0; k <= r; ++k) sum += out[k];
    for (int k = 0; k <= r; ++k) out[k] /= sum;
}

// Single Lagrange basis value l^i_{j,k}(x) for x in cell (i,j).
template <class Real>
Real lagrange_eval(const Mesh<Real>& mesh, std::size_t i, std::size_t j, std::size_t k, const Real& x) {
    const MeshInterval<Real>& iv = mesh.intervals[i];
    Real x_hat = 2 * (x - (iv.a + Real(j) * iv.h)) / iv.h - 1;
    x_hat = std::min(Real(1), std::max(Real(-1), x_hat));
    std::vector<Real> vals(mesh.r + 1);
    basis_values(mesh, x_hat, vals.data());
    return vals[k];
}

}  // namespace cfdim

#pragma once

// Continued-fraction iterated function systems. The maps are the Moebius
// family x -> 1/(x + beta) for a finite digit set of reals >= 1. Words of
// maps compose through the continuant recurrence, which carries a composed
// word as four Moebius coefficients instead of a nested evaluation.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfdim/real.hpp"

namespace cfdim {

template <class Real>
struct GaussIFS {
    std::vector<Real> digits;     // strictly increasing, all >= 1
    Real gamma;                   // smallest digit
    Real Gamma;                   // largest digit
    bool integral = false;        // every digit is an exact small integer
    std::vector<long long> digits_int;  // valid when integral

    explicit GaussIFS(std::vector<Real> digit_list) : digits(std::move(digit_list)) {
        if (digits.size() < 2)
            throw std::invalid_argument("GaussIFS: need at least two distinct digits");
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (digits[i] < 1)
                throw std::invalid_argument("GaussIFS: digits must be >= 1");
            if (i > 0 && !(digits[i - 1] < digits[i]))
                throw std::invalid_argument("GaussIFS: digits must be strictly increasing");
        }
        gamma = digits.front();
        Gamma = digits.back();
        integral = true;
        digits_int.reserve(digits.size());
        for (const Real& d : digits) {
            using std::floor;
            Real fl = floor(d);
            if (fl == d && d < Real(9.0e15)) {
                digits_int.push_back(static_cast<long long>(double(d)));
            } else {
                integral = false;
                digits_int.clear();
                break;
            }
        }
    }

    std::size_t size() const { return digits.size(); }

    // theta_beta(x) = 1/(x + beta)
    Real apply(std::size_t digit_index, const Real& x) const {
        return Real(1) / (x + digits[digit_index]);
    }
};

// A word (beta_1, ..., beta_nu), stored as indices into the digit set.
struct Word {
    std::vector<std::size_t> betas;
    std::size_t nu() const { return betas.size(); }
};

// Moebius coefficients of theta_omega: A_{nu-1}, A_nu, B_{nu-1}, B_nu with
// theta_omega(x) = (A_{nu-1} x + A_nu) / (B_{nu-1} x + B_nu) and
// det = A_nu B_{nu-1} - A_{nu-1} B_nu = (-1)^nu.
template <class Real>
struct Continuants {
    Real A_prev{0}, A{1}, B_prev{1}, B{0};
    std::size_t nu = 0;
};

// Exact-integer variant, used when all digits are integers. Values grow like
// Gamma^nu, so they live in an arbitrary-size integer.
struct ContinuantsExact {
    bigint A_prev{0}, A{1}, B_prev{1}, B{0};
    std::size_t nu = 0;

    void push(long long beta) {
        if (nu == 0) {
            // base case: A_0=0, A_1=1, B_0=1, B_1=beta_1
            B = beta;
        } else {
            bigint a2 = A_prev + beta * A;
            bigint b2 = B_prev + beta * B;
            A_prev = A; A = a2;
            B_prev = B; B = b2;
        }
        ++nu;
    }

    bigint det() const { return A * B_prev - A_prev * B; }
};

template <class Real>
Continuants<Real> word_coeffs(const GaussIFS<Real>& ifs, const Word& word) {
    if (word.betas.empty())
        throw std::invalid_argument("word_coeffs: empty word");
    Continuants<Real> c;
    for (std::size_t j = 0; j < word.betas.size(); ++j) {
        const Real& beta = ifs.digits.at(word.betas[j]);
        if (j == 0) {
            c.B = beta;  // A_0=0, A_1=1, B_0=1, B_1=beta_1
        } else {
            Real a2 = c.A_prev + beta * c.A;
            Real b2 = c.B_prev + beta * c.B;
            c.A_prev = c.A; c.A = a2;
            c.B_prev = c.B; c.B = b2;
        }
    }
    c.nu = word.betas.size();
    return c;
}

template <class Real>
Real theta_omega(const Continuants<Real>& c, const Real& x) {
    return (c.A_prev * x + c.A) / (c.B_prev * x + c.B);
}

// |theta_omega'(x)|^s = (B_{nu-1} x + B_nu)^(-2s). Evaluated through
// exp(-2s ln(.)) so fractional s behaves uniformly at any precision.
template <class Real>
Real weight(const Continuants<Real>& c, const Real& x, const Real& s) {
    using std::exp;
    using std::log;
    return exp(Real(-2) * s * log(c.B_prev * x + c.B));
}

// B~_j: the continuant lower bound built from gamma alone.
// B~_0 = 1, B~_1 = gamma, B~_{j+1} = B~_{j-1} + gamma B~_j.
template <class Real>
Real tilde_B(const Real& gamma, int j) {
    if (j < 0) throw std::invalid_argument("tilde_B: j must be >= 0");
    Real prev(1), cur(gamma);
    if (j == 0) return prev;
    for (int i = 1; i < j; ++i) {
        Real next = prev + gamma * cur;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Closed form of the same recurrence: c1 lam+^j + c2 lam-^j with
// lam = gamma/2 +- sqrt(gamma^2+4)/2.
template <class Real>
Real tilde_B_closed(const Real& gamma, int j) {
    if (j < 0) throw std::invalid_argument("tilde_B_closed: j must be >= 0");
    using std::sqrt;
    Real root = sqrt(gamma * gamma + 4);
    Real lam_p = (gamma + root) / 2;
    Real lam_m = (gamma - root) / 2;
    Real c1 = (root + gamma) / (2 * root);
    Real c2 = (root - gamma) / (2 * root);
    return c1 * pow_int(lam_p, unsigned(j)) + c2 * pow_int(lam_m, unsigned(j));
}

// c(nu) = (B~_{nu-1} a + B~_nu)^(-2): a uniform Lipschitz bound for every
// theta_omega with |omega| = nu on an interval with left endpoint a.
template <class Real>
Real contraction_bound(const GaussIFS<Real>& ifs, int nu, const Real& a_left) {
    if (nu < 1) throw std::invalid_argument("contraction_bound: nu must be >= 1");
    Real d = tilde_B(ifs.gamma, nu - 1) * a_left + tilde_B(ifs.gamma, nu);
    return Real(1) / (d * d);
}

// M0(nu) = 2/(a + b_nu^{-1}); the caller may pass b_nu^{-1} as a_{nu-1}+gamma.
template <class Real>
Real log_lipschitz_bound(const Real& a_left, const Real& b_nu_inverse) {
    return Real(2) / (a_left + b_nu_inverse);
}

// All words of length nu in lexicographic order of (beta_1,...,beta_nu),
// each with its continuants precomputed. Continuants are s-independent, so
// one table serves every transfer-matrix assembly at that nu.
template <class Real>
struct WordTable {
    std::size_t nu;
    std::size_t count;
    std::vector<Continuants<Real>> coeffs;  // lexicographic word order

    WordTable(const GaussIFS<Real>& ifs, std::size_t nu_in) : nu(nu_in) {
        if (nu == 0) throw std::invalid_argument("WordTable: nu must be >= 1");
        const std::size_t n = ifs.size();
        double total_d = 1;
        for (std::size_t j = 0; j < nu; ++j) total_d *= double(n);
        if (total_d > 2.0e7)
            throw std::invalid_argument("WordTable: |B|^nu too large (" + std::to_string(total_d) + " words)");
        count = std::size_t(total_d + 0.5);
        coeffs.reserve(count);

        std::vector<std::size_t> idx(nu, 0);
        Word w;
        w.betas.resize(nu);
        for (;;) {
            w.betas = idx;
            if (ifs.integral) {
                ContinuantsExact e;
                for (std::size_t j = 0; j < nu; ++j) e.push(ifs.digits_int[idx[j]]);
                Continuants<Real> c;
                c.A_prev = Real(e.A_prev);
                c.A = Real(e.A);
                c.B_prev = Real(e.B_prev);
                c.B = Real(e.B);
                c.nu = nu;
                coeffs.push_back(c);
            } else {
                coeffs.push_back(word_coeffs(ifs, w));
            }
            // odometer increment, beta_1 most significant
            std::size_t j = nu;
            while (j > 0) {
                --j;
                if (++idx[j] < n) break;
                idx[j] = 0;
                if (j == 0) return;
            }
        }
    }
};

}  // namespace cfdim

#pragma once

// Precision backends. Everything numeric in this library is templated on a
// Real type; three instantiations are supported:
//
//   double                              fast path, ~16 significant digits
//   boost::multiprecision::float128     IEEE binary128, ~34 significant digits
//   boost::multiprecision::mpfr_float   arbitrary precision, set at runtime
//
// The command-line tool maps a requested decimal-digit count onto a backend
// (<= 34 -> binary128, otherwise MPFR at the requested precision).

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/float128.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace cfdim {

using float128 = boost::multiprecision::float128;
using mpfloat = boost::multiprecision::mpfr_float;
using bigint = boost::multiprecision::cpp_int;

template <class Real>
struct real_traits {
    static Real eps() { return std::numeric_limits<Real>::epsilon(); }
    static int digits10() { return std::numeric_limits<Real>::digits10; }
    static int max_digits10() { return std::numeric_limits<Real>::max_digits10; }
    // Called at entry of every worker thread (MPFR precision is thread-local).
    static void thread_init() {}
    static const char* backend_name() { return "unknown"; }
};

template <>
struct real_traits<double> {
    static double eps() { return std::numeric_limits<double>::epsilon(); }
    static int digits10() { return 15; }
    static int max_digits10() { return 17; }
    static void thread_init() {}
    static const char* backend_name() { return "ieee-double"; }
};

template <>
struct real_traits<float128> {
    static float128 eps() { return std::numeric_limits<float128>::epsilon(); }
    static int digits10() { return std::numeric_limits<float128>::digits10; }
    static int max_digits10() { return std::numeric_limits<float128>::max_digits10; }
    static void thread_init() {}
    static const char* backend_name() { return "ieee-binary128"; }
};

// Process-wide MPFR working precision in decimal digits. Boost keeps the
// default precision per thread, so worker threads re-apply this value.
inline unsigned& mpfr_working_digits() {
    static unsigned digits = 50;
    return digits;
}

inline void set_mpfr_working_digits(unsigned digits) {
    mpfr_working_digits() = digits;
    mpfloat::default_precision(digits);
}

template <>
struct real_traits<mpfloat> {
    static mpfloat eps() {
        int bits = int(mpfr_working_digits() * 3.3219280948873623) + 1;
        return boost::multiprecision::ldexp(mpfloat(1), 1 - bits);
    }
    static int digits10() { return int(mpfr_working_digits()); }
    static int max_digits10() { return int(mpfr_working_digits()) + 3; }
    static void thread_init() { mpfloat::default_precision(mpfr_working_digits()); }
    static const char* backend_name() { return "mpfr"; }
};

// Decimal-digit count of the working precision ("P" in tolerance formulas).
template <class Real>
int working_digits() {
    return real_traits<Real>::digits10();
}

template <class Real>
Real real_eps() {
    return real_traits<Real>::eps();
}

template <class Real>
Real parse_real(const std::string& s) {
    return Real(s);
}
template <>
inline double parse_real<double>(const std::string& s) {
    return std::stod(s);
}

// Full-precision decimal rendering; round-trips exactly for binary backends.
template <class Real>
std::string to_decimal_string(const Real& x) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(real_traits<Real>::max_digits10() - 1) << x;
    return os.str();
}

template <class Real>
Real pi_const() {
    using std::atan;
    return 4 * atan(Real(1));
}

// x^n by binary exponentiation, n >= 0.
template <class Real>
Real pow_int(Real x, unsigned n) {
    Real acc(1);
    while (n) {
        if (n & 1u) acc *= x;
        x *= x;
        n >>= 1;
    }
    return acc;
}

template <class Real>
Real abs_val(const Real& x) {
    using std::abs;
    return abs(x);
}

}  // namespace cfdim

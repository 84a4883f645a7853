#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <gmpxx.h>
#include <mpfr.h>

#include "thetapow/errors.hpp"

namespace thetapow {

using prec_t = mpfr_prec_t;

// Widen MPFR's exponent range for the calling thread (idempotent).
void ensure_exponent_range();

// Owning mpfr_t.
class Mpfr {
public:
    explicit Mpfr(prec_t prec = 64);
    Mpfr(const Mpfr& o);
    Mpfr(Mpfr&& o) noexcept;
    Mpfr& operator=(const Mpfr& o);
    Mpfr& operator=(Mpfr&& o) noexcept;
    ~Mpfr();

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    prec_t prec() const { return mpfr_get_prec(v_); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    std::string str(int digits, mpfr_rnd_t rnd) const;

private:
    mpfr_t v_;
};

enum class Verdict { LE, GT, UNDECIDED };
const char* verdict_name(Verdict v);

// Midpoint-radius real: the true value lies in [mid - rad, mid + rad].
class CertReal {
public:
    static constexpr prec_t kRadPrec = 64;

    explicit CertReal(prec_t prec = 128);

    static CertReal from_int(long v, prec_t prec);
    static CertReal from_mpz(const mpz_class& v, prec_t prec);
    static CertReal from_rational(const mpq_class& q, prec_t prec);
    // Exact copy of an mpfr value.
    static CertReal from_mpfr(const Mpfr& v, prec_t prec);
    // Smallest midpoint-radius ball (at prec) containing [lo, hi].
    static CertReal enclose(const Mpfr& lo, const Mpfr& hi, prec_t prec);

    prec_t prec() const { return prec_; }
    const Mpfr& mid() const { return mid_; }
    const Mpfr& rad() const { return rad_; }

    Mpfr lower() const;
    Mpfr upper() const;
    bool is_exact() const { return mpfr_zero_p(rad_.get()); }
    bool certifies_positive() const;
    bool certifies_negative() const;
    bool certifies_nonzero() const { return certifies_positive() || certifies_negative(); }
    bool contains(const Mpfr& v) const;
    bool contains(const CertReal& o) const;
    bool overlaps(const CertReal& o) const;

    double approx() const { return mid_.to_double(); }
    // Decimal strings of the endpoints, rounded outward.
    std::string lower_str(int digits = 30) const;
    std::string upper_str(int digits = 30) const;
    std::string mid_str(int digits = 30) const;

    CertReal operator-() const;
    friend CertReal operator+(const CertReal& a, const CertReal& b);
    friend CertReal operator-(const CertReal& a, const CertReal& b);
    friend CertReal operator*(const CertReal& a, const CertReal& b);
    friend CertReal operator/(const CertReal& a, const CertReal& b);

    CertReal abs() const;
    // Multiply by 2^e exactly.
    CertReal mul_2exp(long e) const;
    // Return a copy with the radius enlarged by r (r >= 0).
    CertReal inflate(const Mpfr& r) const;

private:
    Mpfr mid_;
    Mpfr rad_;
    prec_t prec_;
};

// Exact rational from "-12.5e-3", "7", "3/8", ...
mpq_class parse_rational(const std::string& text);

CertReal cr_from_decimal(const std::string& text, prec_t prec);

CertReal cr_root(const CertReal& x, unsigned long d);
CertReal cr_pow(const CertReal& x, const CertReal& theta);
CertReal cr_exp(const CertReal& x);
CertReal cr_exp2(const CertReal& x);
CertReal cr_log(const CertReal& x);
CertReal cr_log2(const CertReal& x);
CertReal cr_log1p(const CertReal& x);
CertReal cr_expm1(const CertReal& x);
// 2^x - 1
CertReal cr_exp2m1(const CertReal& x);
CertReal cr_ln2(prec_t prec);
CertReal cr_pi(prec_t prec);

Verdict compare_le(const CertReal& x, const CertReal& bound);

struct DistResult {
    CertReal dist;
    Verdict verdict = Verdict::UNDECIDED;
    bool positive = false; // interval excludes 0
    mpz_class nearest;     // nearest integer to the midpoint
};

// ||x|| = distance to the nearest integer, compared against bound.
DistResult dist_nearest_int(const CertReal& x, const CertReal& bound);
DistResult dist_nearest_int(const CertReal& x, const mpq_class& bound);

std::optional<mpz_class> certified_floor(const CertReal& x);
std::optional<mpz_class> certified_ceil(const CertReal& x);

struct Precision {
    prec_t start = 128;
    prec_t cap = 65536;
};

// Start precision from THETA_POWERS_PRECISION if set, else 128.
Precision precision_from_env();

// Call attempt(prec) with prec = start, 2*start, ... up to cap; return the
// first engaged result, throw Undecided otherwise.
template <class F>
auto refine(const Precision& p, F&& attempt, const char* what = "comparison")
    -> typename decltype(attempt(prec_t{}))::value_type {
    for (prec_t prec = p.start;; prec *= 2) {
        if (prec > p.cap) prec = p.cap;
        auto r = attempt(prec);
        if (r) return std::move(*r);
        if (prec >= p.cap) break;
    }
    throw Undecided(std::string(what) + " undecided at precision cap " + std::to_string(p.cap));
}

} // namespace thetapow

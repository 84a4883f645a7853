#pragma once

#include <optional>
#include <string>

#include "thetapow/certreal.hpp"
#include "thetapow/radical.hpp"

namespace thetapow {

enum class Regime { SUB1, ONE, SUPER1, GE2 };
const char* regime_name(Regime r);
Regime regime_of(const mpq_class& theta);

// 1 - 3/(2 theta) on (0,1) u (1,2); 0 at 1; 1 - 2/theta + 1/theta^2 for theta >= 2
mpq_class psi(const mpq_class& theta);

// u^theta, exact when rational
CertReal pow_int(const mpz_class& u, const mpq_class& theta, prec_t prec);
// sign of u^theta + v^theta - x; 0 only when provably equal
int compare_sum_pow(const mpz_class& u, const mpz_class& v, const mpq_class& theta, const mpq_class& x,
                    const Precision& p = {});

// I(t) = (s + t)^theta + (s - t)^theta
CertReal I_theta(const mpq_class& theta, const mpz_class& s, const mpq_class& t, prec_t prec);

struct GapInternals {
    mpz_class s;
    CertReal E;              // x - 2 s^theta
    bool E_zero = false;     // E exactly 0
    mpq_class k_lo{0}, k_hi{0}; // k_theta in [k_lo, k_hi]
    mpz_class l;
    bool l_safe_rounded = false; // l fixed by safe-side rounding
};

// theta in (0,1) u (1,2). Throws DomainError when I(t) = x has no root on [0, s].
GapInternals solve_k_theta(const mpq_class& theta, const mpq_class& x, const Precision& p = {});

struct GapWitness {
    std::string theta_text;
    mpq_class theta;
    mpq_class x;
    mpz_class u, v;
    CertReal value;
    CertReal slack;
    mpq_class psi;
    Regime regime = Regime::ONE;
    bool fallback = false;
    std::optional<GapInternals> internals;
    std::string note;
};

GapWitness gap_element(const std::string& theta, const std::string& x, const Precision& p = {});
GapWitness gap_element(const mpq_class& theta, const mpq_class& x, const Precision& p = {});

struct NextElement {
    mpz_class u, v; // u <= v
    CertReal value;
};

// least element of {u^theta + v^theta : 0 <= u <= v <= cap} that is >= x
NextElement oracle_next_element(const mpq_class& theta, const mpq_class& x, long cap, const Precision& p = {});

// x^(1/theta) rounded up plus one: a cap that always admits a solution
long default_oracle_cap(const mpq_class& theta, const mpq_class& x);

// theta^(2 - 1/theta) for theta >= 2; calibrated max slack / x^psi over the
// calibration grid otherwise (memoised)
CertReal gap_constant(const mpq_class& theta, const Precision& p = {});
CertReal gap_bound(const mpq_class& theta, const mpq_class& x, const Precision& p = {});

struct TwoPowers {
    long u = 0, v = 0;
    mpq_class alpha_star;
    CertReal dist;
    std::optional<CertReal> bound;
    Verdict verdict = Verdict::UNDECIDED;
    bool fallback = false;
    bool single_power = false;
    std::string note;
};

TwoPowers approx_two_powers(const std::string& theta, const std::string& alpha, long n, const Precision& p = {});
TwoPowers oracle_two_powers(const mpq_class& theta, const mpq_class& alpha, long n, const Precision& p = {});

} // namespace thetapow

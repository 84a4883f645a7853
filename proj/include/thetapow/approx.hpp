#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thetapow/certreal.hpp"
#include "thetapow/radical.hpp"

namespace thetapow {

// gamma(k,d) = (d^floor(log_d(k+1)) - 1) / d
mpq_class gamma(unsigned k, unsigned d);
// (k - d + 1) / d^2
mpq_class gamma_lower(unsigned k, unsigned d);
mpq_class gamma_star(unsigned k, unsigned d);
// largest xi with d^xi <= k + 1
unsigned xi_for(unsigned k, unsigned d);

struct ApproxConfig {
    SearchConfig search{};
    unsigned max_xi_d2 = 2;    // default basis caps
    unsigned max_xi_other = 1;
};

// q + w, an exact element of Q + S_xi
struct Affine {
    mpq_class q{0};
    RadicalSum w;

    CertReal eval(prec_t prec) const;
    RadicalForm form() const;
    bool is_zero() const { return q == 0 && w.is_zero_vector() && w.offset == 0; }
};

struct SingleResult {
    long a = 0;
    mpz_class level;   // floor(n^theta) - 1
    CertReal dist;     // ||a^theta - alpha||
    CertReal bound;    // theta * 3^(1/theta - 1) * n^(theta - 1)
    Verdict verdict = Verdict::UNDECIDED;
    prec_t precision = 0;
};

SingleResult approx_single(const mpq_class& theta, const std::string& alpha, long n, const Precision& p = {});

struct ChainLevel {
    long level_n = 0;   // 2^j
    RadicalSum x;       // offset folded, value = {x_j}
    CertReal frac;
    long long y = 0;
    bool clamped = false; // y reduced to respect the height budget
};

struct ChainResult {
    RadicalSum omega;           // sum y_h x_h (offsets included), value = sum y_h {x_h}
    std::vector<ChainLevel> levels;
    Affine residual;            // alpha0 - omega
    CertReal residual_value;
    mpq_class level_bound{1};   // 2^(-t (d^xi - 1)) for the last level t
    std::string stop_reason;
};

ChainResult greedy_chain(const RadicalBasis& b, const Affine& alpha0, long budget, const SearchConfig& cfg = {});

struct ShiftResult {
    std::vector<long long> coeffs; // c_f, aligned with basis elements
    long half = 0;                 // floor(n/2)
    long budget = 0;               // floor(n/3)
    ChainResult chain;
    CertReal dist;                 // ||sum c_f f^(1/d) - alpha||
};

ShiftResult positive_shift(const RadicalBasis& b, const mpq_class& alpha, long n, const SearchConfig& cfg = {});

struct OracleSum {
    std::vector<long> b;
    CertReal dist;
};

OracleSum oracle_min_sum(unsigned k, unsigned d, const mpq_class& alpha, long n, const SearchConfig& cfg = {},
                         bool exclude_exact = false);

struct ApproxCertificate {
    unsigned k = 0, d = 0;
    long n = 0;
    std::string alpha;
    unsigned xi = 0;
    std::vector<long> b;
    std::vector<long long> shift_coeffs;
    long reduced_n = 0;              // budget handed to positive_shift
    CertReal dist;
    mpq_class exponent;
    std::optional<CertReal> constant; // calibrated C, absent when calibration failed
    std::optional<CertReal> bound;
    Verdict verdict = Verdict::UNDECIDED;
    bool fallback = false;
    std::string note;
    prec_t precision = 0;
};

ApproxCertificate approx_sum_roots(unsigned k, unsigned d, const std::string& alpha, long n,
                                   const ApproxConfig& cfg = {});

// Construction only, no bound (used by calibration).
ApproxCertificate construct_sum_roots(unsigned k, unsigned d, const mpq_class& alpha, long n,
                                      const ApproxConfig& cfg = {});

// Memoised max of dist * n^gamma over the calibration grid.
std::optional<CertReal> calibrated_constant(unsigned k, unsigned d, const ApproxConfig& cfg = {});

extern const char* const kPiMinus3;

} // namespace thetapow

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thetapow/certreal.hpp"

namespace thetapow {

struct SearchConfig {
    std::uint64_t enum_cap = std::uint64_t{1} << 26;
    unsigned basis_cap = 64; // max d^xi
    Precision precision{};
};

std::vector<unsigned long> first_primes(unsigned count);
std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n);

// floor(x^(1/d)) for x >= 0.
mpz_class integer_root(const mpz_class& x, unsigned long d);
// Exact value of base^e when it is rational (base >= 0).
std::optional<mpq_class> exact_rational_power(const mpq_class& base, const mpq_class& e);

// Exact element of Q + sum_r Q * r^(1/q) with r > 1 q-th-power-free, stored
// by the factorisation of r. Radicals with distinct r are linearly
// independent over Q, so equality of forms is equality of reals.
class RadicalForm {
public:
    using Radicand = std::vector<std::pair<std::uint64_t, std::uint64_t>>; // (prime, exponent < q)

    explicit RadicalForm(std::uint64_t q = 1) : q_(q) {}

    std::uint64_t order() const { return q_; }
    // this += coeff * base^(p/q)
    void add_power(std::uint64_t base, std::uint64_t p, const mpq_class& coeff = 1);
    void add_rational(const mpq_class& v) { rational_ += v; }
    void negate();
    // this += scale * o (same order q, or o rational)
    void add(const RadicalForm& o, const mpq_class& scale = 1);
    bool is_integer() const { return terms_.empty() && rational_.get_den() == 1; }
    bool is_rational() const { return terms_.empty(); }
    const mpq_class& rational_part() const { return rational_; }
    bool operator==(const RadicalForm& o) const;

private:
    std::uint64_t q_;
    mpq_class rational_{0};
    std::map<Radicand, mpq_class> terms_;
};

struct RadicalBasis {
    unsigned d = 2;
    unsigned xi = 1;
    std::vector<unsigned long> primes;
    std::vector<std::uint64_t> elements; // P*, sorted, 1 excluded

    std::size_t size() const { return elements.size(); }
    // p_1^(d-1) ... p_xi^(d-1)
    std::uint64_t product() const;
};

RadicalBasis build_basis(unsigned d, unsigned xi, unsigned basis_cap = 64);

// sum_f c_f f^(1/d) - offset
struct RadicalSum {
    unsigned d = 2;
    std::vector<std::uint64_t> elements;
    std::vector<long long> coeffs;
    mpz_class offset{0};

    static RadicalSum zero(const RadicalBasis& b);
    long long height() const; // M(w)
    bool is_zero_vector() const;
    RadicalSum operator+(const RadicalSum& o) const;
    RadicalSum operator-() const;
    RadicalSum scaled(long long k) const;
    std::string describe() const;
};

// Certified f^(1/d), memoised per thread.
const CertReal& root_of(std::uint64_t f, unsigned d, prec_t prec);
CertReal eval_radical_sum(const RadicalSum& w, prec_t prec);
RadicalForm radical_form(const RadicalSum& w);

// n^-(d^xi - 1)
mpq_class pigeonhole_bound(const RadicalBasis& b, long n);

struct SmallFrac {
    RadicalSum w;  // offset = floor of the sum, so the value is {w}
    CertReal frac; // certified, 0 < frac <= pigeonhole bound
};

SmallFrac find_small_fracpart(const RadicalBasis& b, long n, const SearchConfig& cfg = {});

struct OracleDist {
    RadicalSum w; // offset = nearest integer, first nonzero coefficient positive
    CertReal dist;
};

OracleDist min_nonzero_dist_oracle(const RadicalBasis& b, long n, const SearchConfig& cfg = {});

} // namespace thetapow

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "thetapow/approx.hpp"

using namespace thetapow;

namespace {

// ||sum sqrt[d](b_j) - alpha|| recomputed from scratch at 256 bits
CertReal recompute(const std::vector<long>& b, unsigned d, const std::string& alpha) {
    CertReal s = CertReal::from_int(0, 256);
    for (long x : b) s = s + cr_root(CertReal::from_int(x, 256), d);
    return dist_nearest_int(s - cr_from_decimal(alpha, 256), mpq_class(1, 2)).dist;
}

Affine affine(const RadicalBasis& b, const mpq_class& q) { return Affine{q, RadicalSum::zero(b)}; }

} // namespace

TEST_CASE("exponents") {
    CHECK(gamma(3, 2) == mpq_class(3, 2));
    CHECK(gamma(2, 2) == mpq_class(1, 2));
    CHECK(gamma(1, 2) == mpq_class(1, 2));
    CHECK(gamma(7, 2) == mpq_class(7, 2));
    CHECK(gamma(8, 3) == mpq_class(8, 3));
    CHECK(gamma_lower(3, 2) == mpq_class(1, 2));
    CHECK(gamma_star(2, 2) == 1);
    CHECK(gamma_star(1, 2) == mpq_class(1, 2));
    CHECK(gamma_star(1, 3) == mpq_class(2, 3));
    CHECK(gamma_star(7, 2) == mpq_class(7, 2));
    CHECK(xi_for(1, 2) == 1);
    CHECK(xi_for(3, 2) == 2);
    CHECK(xi_for(2, 3) == 1);
    CHECK(xi_for(1, 3) == 0);
    for (unsigned k = 1; k <= 40; ++k)
        for (unsigned d = 2; d <= 5; ++d) CHECK(gamma(k, d) >= gamma_lower(k, d));
}

TEST_CASE("single power") {
    SingleResult a = approx_single(mpq_class(1, 2), "0.5", 100);
    CHECK(a.a == 91);
    CHECK(a.dist.approx() == doctest::Approx(0.0393920141694565).epsilon(1e-12));
    CHECK(a.verdict == Verdict::LE);

    // floor(n^theta) - 1 = 9 gives the perfect square 81
    SingleResult z = approx_single(mpq_class(1, 2), "0", 100);
    CHECK(z.a == 81);
    CHECK(z.dist.is_exact());
    CHECK(z.dist.approx() == 0.0);

    SingleResult c = approx_single(mpq_class(1, 3), "0.2", 1000);
    CHECK(c.a == 779);
    CHECK(c.verdict == Verdict::LE);
    // exhaustive minimum over a <= 1000 is a = 779 as well
    CHECK(c.dist.approx() == doctest::Approx(0.00122856938871265).epsilon(1e-10));

    CHECK_THROWS_AS(approx_single(mpq_class(3, 2), "0.5", 100), DomainError);
}

TEST_CASE("greedy chain") {
    RadicalBasis b1 = build_basis(2, 1), b2 = build_basis(2, 2);
    ChainResult z = greedy_chain(b1, affine(b1, 0), 64);
    for (const auto& l : z.levels) CHECK(l.y == 0);
    CHECK(z.residual_value.approx() == 0.0);
    CHECK(z.omega.height() == 0);

    ChainResult h = greedy_chain(b1, affine(b1, mpq_class(1, 2)), 128);
    CHECK(h.omega.height() <= 128);
    CHECK(h.levels.size() == 7);
    CHECK_FALSE(h.residual_value.certifies_negative());
    CHECK(compare_le(h.residual_value, CertReal::from_rational(h.level_bound, 128)) == Verdict::LE);
    CHECK(h.level_bound == mpq_class(1, 128));

    // budget 16 cannot absorb the first multiplier: the chain is clamped and
    // the residual stays above the last pigeonhole bound
    ChainResult q = greedy_chain(b2, affine(b2, mpq_class(1, 4)), 16);
    CHECK(q.omega.height() <= 16);
    CHECK_FALSE(q.residual_value.certifies_negative());
    CHECK(q.residual_value.approx() == doctest::Approx(0.21284642).epsilon(1e-7));

    // residuals are nonincreasing along the chain
    mpq_class alpha(1, 3);
    CertReal prev = CertReal::from_rational(alpha, 128);
    ChainResult m = greedy_chain(b1, affine(b1, alpha), 1 << 12);
    for (const auto& l : m.levels) {
        CertReal step = l.frac * CertReal::from_int(static_cast<long>(l.y), 128);
        CHECK_FALSE(step.certifies_negative());
        CHECK(step.lower().to_double() <= prev.upper().to_double());
        prev = prev - step;
    }
    CHECK(m.residual_value.overlaps(prev));
}

TEST_CASE("positive shift") {
    ShiftResult s = positive_shift(build_basis(2, 1), mpq_class(1, 2), 60);
    CHECK(s.half == 30);
    CHECK(s.budget == 20);
    CHECK(s.coeffs[0] >= 10);
    CHECK(s.coeffs[0] <= 50);
    CHECK(compare_le(s.dist, CertReal::from_rational(s.chain.level_bound, 128)) == Verdict::LE);

    ShiftResult t = positive_shift(build_basis(2, 2), parse_rational("0.123"), 30);
    REQUIRE(t.coeffs.size() == 3);
    for (auto c : t.coeffs) {
        CHECK(c >= 5);
        CHECK(c <= 25);
    }
    CHECK_THROWS_AS(positive_shift(build_basis(2, 1), mpq_class(1, 2), 5), DomainError);
}

TEST_CASE("oracle") {
    OracleSum a = oracle_min_sum(1, 2, 0, 10);
    CHECK(a.b == std::vector<long>{9});
    CHECK(a.dist.approx() == 0.0);
    // sqrt 6 = 2.449 is closer to 1/2 mod 1 than sqrt 2
    OracleSum h = oracle_min_sum(1, 2, mpq_class(1, 2), 10);
    CHECK(h.b == std::vector<long>{6});
    CHECK(h.dist.approx() == doctest::Approx(0.0505102572).epsilon(1e-9));
    OracleSum e = oracle_min_sum(2, 2, 0, 3, {}, true);
    CHECK(e.b == std::vector<long>{2, 3});
    CHECK(e.dist.approx() == doctest::Approx(0.1462643699).epsilon(1e-9));
    SearchConfig tight;
    tight.enum_cap = 1000;
    CHECK_THROWS_AS(oracle_min_sum(3, 2, 0, 100, tight), CapExceeded);
}

TEST_CASE("sums of roots") {
    ApproxCertificate big = approx_sum_roots(3, 2, "0", 10000);
    CHECK(big.b == std::vector<long>{98, 1350, 1875});
    CHECK_FALSE(big.fallback);
    CHECK(big.dist.overlaps(recompute(big.b, 2, "0")));
    CHECK(big.exponent == mpq_class(3, 2));

    ApproxCertificate one = approx_sum_roots(1, 2, "0.41421356", 50);
    CHECK(one.b == std::vector<long>{2});
    CHECK(one.fallback);

    ApproxCertificate small = approx_sum_roots(3, 2, "0.7", 20);
    CHECK(small.fallback);
    OracleSum o = oracle_min_sum(3, 2, parse_rational("0.7"), 20);
    CHECK(small.dist.overlaps(o.dist));

    ApproxCertificate triv = approx_sum_roots(1, 3, "0.25", 100);
    CHECK(triv.xi == 0);
    CHECK(triv.b == std::vector<long>{1});

    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        unsigned k = 1 + rng() % 3;
        long n = 40 + static_cast<long>(rng() % 400);
        std::string alpha = std::to_string(rng() % 1000) + "/1000";
        ApproxCertificate c = approx_sum_roots(k, 2, alpha, n);
        CHECK(c.b.size() == k);
        for (long x : c.b) {
            CHECK(x >= 1);
            CHECK(x <= n);
        }
        CHECK(c.dist.overlaps(recompute(c.b, 2, alpha)));
        if (c.verdict == Verdict::LE) CHECK(compare_le(c.dist, *c.bound) == Verdict::LE);
    }
}

TEST_CASE("oracle dominance on small instances") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 15; ++i) {
        unsigned k = 1 + rng() % 2;
        long n = 8 + static_cast<long>(rng() % 57);
        std::string alpha = std::to_string(rng() % 997) + "/997";
        ApproxCertificate c = approx_sum_roots(k, 2, alpha, n);
        OracleSum o = oracle_min_sum(k, 2, parse_rational(alpha), n);
        CHECK(compare_le(o.dist, c.dist) != Verdict::GT);
    }
}

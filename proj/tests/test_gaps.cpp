#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "thetapow/gaps.hpp"

using namespace thetapow;

namespace {

mpq_class q(const char* s) { return parse_rational(s); }

bool value_ge_x(const GapWitness& w) {
    return !(w.value - CertReal::from_rational(w.x, w.value.prec())).certifies_negative();
}

// x = 10 + 97 j + 0.37 on [10, 10^4]
std::vector<mpq_class> grid() {
    std::vector<mpq_class> xs;
    for (int j = 0; j < 103; ++j) xs.push_back(mpq_class(10 + 97 * j) + mpq_class(37, 100));
    return xs;
}

} // namespace

TEST_CASE("gap exponent") {
    CHECK(psi(2) == mpq_class(1, 4));
    CHECK(psi(q("3/2")) == 0);
    CHECK(psi(1) == 0);
    CHECK(psi(q("1/2")) == -2);
    CHECK(psi(3) == mpq_class(4, 9));
    CHECK(regime_of(q("0.5")) == Regime::SUB1);
    CHECK(regime_of(1) == Regime::ONE);
    CHECK(regime_of(q("1.5")) == Regime::SUPER1);
    CHECK(regime_of(2) == Regime::GE2);
}

TEST_CASE("root of I(t) = x") {
    GapInternals a = solve_k_theta(q("3/2"), 20);
    CHECK(a.s == 4);
    CHECK(a.E.approx() == doctest::Approx(4.0));
    CHECK(a.k_lo <= q("3.1868573437"));
    CHECK(a.k_hi >= q("3.1868573437"));
    CHECK(a.k_hi - a.k_lo < mpq_class(1, 4));
    CHECK(a.l == 4);

    GapInternals z = solve_k_theta(q("3/2"), 16);
    CHECK(z.E_zero);
    CHECK(z.k_hi == 0);
    CHECK(z.l == 0);

    GapInternals h = solve_k_theta(q("1/2"), 10);
    CHECK(h.s == 25);
    CHECK(h.E_zero);
    CHECK(h.l == 0);

    CHECK_THROWS_AS(solve_k_theta(2, 20), DomainError);
}

TEST_CASE("gap elements") {
    GapWitness a = gap_element("2", "103");
    CHECK(a.u == 2);
    CHECK(a.v == 10);
    CHECK(a.value.approx() == 104.0);
    CHECK(a.slack.approx() == 1.0);
    CHECK(compare_le(a.slack, gap_bound(2, 103)) == Verdict::LE);
    CHECK(gap_bound(2, 103).approx() == doctest::Approx(9.0106122168));

    GapWitness b = gap_element("3/2", "20");
    CHECK(b.u + b.v == 8);
    CHECK(b.u * b.v == 0);
    CHECK(b.value.approx() == doctest::Approx(22.627417));

    GapWitness c = gap_element("1", "7.3");
    CHECK(c.u + c.v == 8);
    CHECK(c.value.approx() == 8.0);

    GapWitness d = gap_element("0.5", "10");
    CHECK(d.u == 25);
    CHECK(d.v == 25);
    CHECK(d.slack.approx() == 0.0);

    GapWitness e = gap_element("3", "123456");
    CHECK(e.u == 18);
    CHECK(e.v == 49);
    CHECK(e.slack.approx() == 25.0);

    CHECK_THROWS_AS(gap_element("-1", "10"), DomainError);
    CHECK_THROWS_AS(gap_element("2", "abc"), ParseError);
}

TEST_CASE("next element oracle") {
    NextElement a = oracle_next_element(q("3/2"), 20, 10);
    CHECK(a.u == 2);
    CHECK(a.v == 7);
    CHECK(a.value.approx() == doctest::Approx(21.34871));
    NextElement b = oracle_next_element(2, 100, 12);
    CHECK(b.u == 6);
    CHECK(b.v == 8);
    NextElement c = oracle_next_element(2, 103, 12);
    CHECK(c.u == 2);
    CHECK(c.v == 10);
    CHECK(c.value.approx() == 104.0);
    CHECK_THROWS(oracle_next_element(2, 1000, 3));
}

TEST_CASE("sign, size and monotonicity on the grid") {
    for (const char* th : {"0.3", "0.7", "1.2", "1.8"}) {
        mpq_class t = q(th);
        double td = t.get_d();
        for (const auto& x : grid()) {
            GapInternals g;
            try {
                g = solve_k_theta(t, x);
            } catch (const DomainError&) {
                continue; // no root on [0, s]; gap_element takes the oracle path there
            }
            if (td < 1)
                CHECK_FALSE(g.E.certifies_positive());
            else
                CHECK_FALSE(g.E.certifies_negative());
            double xd = x.get_d();
            CHECK(std::fabs(g.E.approx()) * std::pow(xd, 1 / td - 1) <= 4.0);
            CHECK(g.k_hi.get_d() * std::pow(xd, -1 / (2 * td)) <= 3.0);
            CHECK(g.l >= 0);
            CHECK(g.l <= g.s);
            // I is monotone in t on [0, s]
            int dir = 0;
            CertReal prev = I_theta(t, g.s, 0, 128);
            for (int i = 1; i <= 8; ++i) {
                mpq_class tt = mpq_class(g.s) * mpq_class(i, 8);
                CertReal cur = I_theta(t, g.s, tt, 128);
                CertReal diff = cur - prev;
                int sgn = diff.certifies_positive() ? 1 : diff.certifies_negative() ? -1 : 0;
                if (sgn != 0) {
                    if (dir == 0) dir = sgn;
                    CHECK(sgn == dir);
                }
                prev = cur;
            }
            CHECK(dir == (td < 1 ? -1 : 1));
        }
    }
}

TEST_CASE("witness containment and oracle dominance") {
    for (const char* th : {"0.3", "0.7", "1.2", "1.5", "1.8", "2", "2.5", "3"}) {
        mpq_class t = q(th);
        for (const auto& x : grid()) {
            GapWitness w = gap_element(t, x);
            CHECK(value_ge_x(w));
            if (regime_of(t) == Regime::GE2) CHECK(compare_le(w.slack, gap_bound(t, x)) == Verdict::LE);
            long cap = default_oracle_cap(t, x);
            if (cap > 20000) continue;
            NextElement o = oracle_next_element(t, x, cap);
            CHECK(compare_le(o.value, w.value) != Verdict::GT);
        }
    }
}

TEST_CASE("two powers") {
    TwoPowers a = approx_two_powers("1.2", "0.3", 50);
    CHECK(a.verdict == Verdict::LE);
    CHECK(a.u >= 1);
    CHECK(a.v <= 50);
    TwoPowers oa = oracle_two_powers(q("1.2"), q("0.3"), 50);
    CHECK(((oa.u == 6 && oa.v == 13) || (oa.u == 13 && oa.v == 6)));
    CHECK(compare_le(oa.dist, a.dist) == Verdict::LE);

    TwoPowers b = approx_two_powers("0.5", "0", 100);
    CHECK(b.dist.approx() == 0.0);

    TwoPowers c = approx_two_powers("1.4", "0.9999", 40);
    CHECK(c.verdict == Verdict::LE);
    TwoPowers oc = oracle_two_powers(q("1.4"), q("0.9999"), 40);
    CHECK(oc.u == 32);
    CHECK(oc.v == 32);
    CHECK(oc.dist.approx() == doctest::Approx(0.0001).epsilon(1e-6));

    TwoPowers one = approx_two_powers("1", "0.25", 10);
    CHECK(one.u == 1);
    CHECK(one.v == 1);
}

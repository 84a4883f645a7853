#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "thetapow/metric.hpp"

using namespace thetapow;

namespace {

RhoSchedule rho(const char* s) { return RhoSchedule::parse(s); }
PhiSchedule phi(const char* s) { return PhiSchedule::parse(s); }

double est(const MeasureEstimate& e) { return e.estimate.approx(); }

} // namespace

TEST_CASE("schedules") {
    CHECK(rho("const:1").eval(5, 128).approx() == 1.0);
    CHECK(rho("const:1/2").approx(5) == 0.5L);
    CHECK(rho("inv_log_sq").eval(1, 128).approx() == doctest::Approx(1 / (std::log(2.0) * std::log(2.0))));
    CHECK(rho("power:1").eval(16, 128).approx() == 1.0 / 16);
    CHECK(rho("power:1/2").eval(16, 128).approx() == doctest::Approx(0.25));
    CHECK(rho("inv_log_sq").str() == "inv_log_sq");
}

TEST_CASE("schedule parsing errors") {
    CHECK(rho("const").eval(3, 64).approx() == 1.0);
    CHECK_THROWS_AS(rho("bogus"), ParseError);
    CHECK_THROWS_AS(rho("power"), ParseError);
    CHECK_THROWS_AS(phi("table:"), ParseError);
    CHECK_THROWS_AS(phi("table:1,-2"), ParseError);
    CHECK_THROWS_AS(phi("wobble"), ParseError);
    CHECK(phi("table:1/16,1/2").str() == "table:1/16,1/2");
    CHECK(phi("power:2").log2_at(48, 1, 128).approx() == -96.0);
    CHECK(phi("exp_decay").log2_at(2, 0, 128).approx() == -4.0);
}

TEST_CASE("solution counting") {
    CountResult a = count_solutions("1.5", 1, rho("const:1"), 100);
    std::size_t exact = 0;
    for (const auto& r : a.records) {
        CHECK(r.omega.back() == r.m);
        if (r.exact) {
            long s = std::lround(std::sqrt(static_cast<double>(r.m)));
            CHECK(s * s == r.m);
            ++exact;
        }
    }
    CHECK(exact == 10);
    CHECK(a.records.size() >= 10);
    CHECK(a.undecided.empty());

    CountResult b = count_solutions("0.5", 2, rho("const:1"), 50);
    bool found = false;
    for (const auto& r : b.records)
        if (r.omega == std::vector<long>{1, 4}) {
            found = true;
            CHECK(r.exact);
            CHECK(r.b == 3);
        }
    CHECK(found);
    for (const auto& r : b.records) CHECK(r.omega[0] <= r.omega[1]);

    // golden-ratio decimal: 5 records, confirmed by an independent 50-digit scan
    CountResult g = count_solutions("1.6180339887", 1, rho("inv_log_sq"), 200);
    CHECK(g.records.size() == 5);

    for (long M : {10, 50, 200, 400})
        CHECK(count_solutions("3/2", 1, rho("const:1"), M).records.size() >= static_cast<std::size_t>(std::sqrt(M)));

    SUBCASE("records re-verify at doubled precision") {
        for (const auto& r : a.records) {
            CertReal f = CertReal::from_int(0, 256);
            for (long x : r.omega) f = f + cr_pow(CertReal::from_int(x, 256), cr_from_decimal("1.5", 256));
            DistResult d = dist_nearest_int(f, rho("const:1").eval(r.m, 256) / CertReal::from_int(r.m, 256));
            CHECK(d.verdict == Verdict::LE);
        }
    }
    SUBCASE("threads do not change the answer") {
        MetricConfig cfg;
        cfg.threads = 4;
        CountResult t = count_solutions("1.5", 1, rho("const:1"), 100, cfg);
        REQUIRE(t.records.size() == a.records.size());
        for (std::size_t i = 0; i < t.records.size(); ++i) CHECK(t.records[i].omega == a.records[i].omega);
    }
    MetricConfig tight;
    tight.enum_cap = 100;
    CHECK_THROWS_AS(count_solutions("1.5", 3, rho("const:1"), 100, tight), CapExceeded);
}

TEST_CASE("measure of V(m)") {
    MeasureEstimate all = sample_Vm_measure(1, rho("const:1"), 2, "1", "2", 10000);
    CHECK(all.hits == 10000);
    CHECK(est(all) == 1.0);

    // frozen grid counts (numpy cross-check gives the same hits)
    const std::pair<long, std::uint64_t> frozen[] = {{8, 3124}, {16, 778}, {32, 187}, {64, 46}};
    std::vector<double> xs, ys;
    for (auto [m, hits] : frozen) {
        MeasureEstimate e = sample_Vm_measure(1, rho("power:1"), m, "1", "2", 100000);
        CHECK(e.hits == hits);
        CHECK(e.undecided == 0);
        xs.push_back(std::log(static_cast<double>(m)));
        ys.push_back(std::log(est(e)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / xs.size(), my += ys[i] / ys.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) num += (xs[i] - mx) * (ys[i] - my), den += (xs[i] - mx) * (xs[i] - mx);
    CHECK(num / den <= -1.5);

    MeasureEstimate lo = sample_Vm_measure(2, rho("inv_log_sq"), 8, "0.5", "1.5", 100000);
    MeasureEstimate hi = sample_Vm_measure(2, rho("const:1"), 8, "0.5", "1.5", 100000);
    CHECK(est(lo) <= est(hi));

    CHECK_THROWS_AS(sample_Vm_measure(1, rho("const:1"), 2, "1", "2", 10), DomainError);
    CHECK_THROWS_AS(sample_Vm_measure(1, rho("const:1"), 2, "2", "1", 1000), DomainError);
}

TEST_CASE("exceptional theta construction") {
    ThetaSeq t = construct_theta(phi("exp_decay"), 1, 2, 1);
    REQUIRE(t.seq.size() == 2);
    CHECK(t.seq[1].str() == "24");
    CHECK(t.steps[0].minimal_certified);
    CHECK(t.steps[0].U == 1);

    // s_1 = 2 gives 2(2^1 - 1) = 2 > 1, so the least admissible term is 3
    ThetaSeq c = construct_theta(phi("power:0"), 1, 2, 1);
    CHECK(c.seq[1].str() == "3");

    ThetaSeq tab = construct_theta(phi("table:1/16"), 1, 2, 1);
    CHECK(tab.seq[1].str() == "24");

    ThetaSeq d = construct_theta(phi("exp_decay"), 1, 2, 2);
    REQUIRE(d.seq.size() == 3);
    const SeqTerm& s2 = d.seq[2];
    CHECK(s2.compact);
    CHECK_FALSE(d.steps[1].minimal_certified);
    CHECK(d.steps[1].U == 25);
    CHECK(d.steps[1].P == 48);
    // log2 s_2 = 2^48 + 25 + log2(ln 2) up to the 128-bit mantissa rounding
    CertReal l2 = cr_log2(CertReal::from_mpz(s2.mant, 512)) + CertReal::from_int(s2.exp2, 512) -
                  CertReal::from_int((1L << 48) + 25, 512) - cr_log2(cr_ln2(512));
    CHECK_FALSE(l2.certifies_negative());
    CHECK(l2.approx() < 1e-30);

    // minimality: s_1 - 1 fails, s_1 passes
    CertReal L0 = phi("exp_decay").log2_at(2, 0, 256);
    CHECK(witness_condition(1, CertReal::from_int(24, 256), L0, 256) == Verdict::LE);
    CHECK(witness_condition(1, CertReal::from_int(23, 256), L0, 256) == Verdict::GT);

    // enclosure inside [r/s, r/(s-1)] and no wider than the tail bound
    for (const ThetaSeq* s : {&t, &c, &d}) {
        CHECK(compare_le(CertReal::from_rational(mpq_class(s->r, s->s), 256), s->theta) != Verdict::GT);
        CHECK(compare_le(s->theta, CertReal::from_rational(mpq_class(s->r, s->s - 1), 256)) == Verdict::LE);
    }
    CHECK(t.theta.rad().to_double() * 2 <= 1.0 / (48.0 * 23.0) * (1 + 1e-9));

    CHECK_THROWS_AS(construct_theta(phi("exp_decay"), 1, 2, 3), DepthUnreachable);
    CHECK_THROWS_AS(construct_theta(phi("exp_decay"), 1, 1, 1), DomainError);
    CHECK_THROWS_AS(construct_theta(phi("table:1/16"), 1, 2, 2), DomainError);
}

TEST_CASE("witnesses") {
    ThetaSeq d = construct_theta(phi("exp_decay"), 1, 2, 2);
    WitnessCheck w0 = verify_witness(d, 0);
    CHECK(w0.pass);
    CHECK(w0.positive);
    CHECK(w0.U == 1);
    CHECK(w0.P == 2);
    CHECK(w0.dist.upper().to_double() <= 0.0625);
    CHECK(w0.dist.upper().to_double() == doctest::Approx(0.0612).epsilon(1e-3));

    WitnessCheck w1 = verify_witness(d, 1);
    CHECK(w1.pass);
    CHECK(w1.positive);
    CHECK(w1.U == 25);
    CHECK(w1.P == 48);
    CHECK(w1.precision <= 512);

    CHECK_THROWS_AS(verify_witness(d, 2), DomainError);

    // a hand-made sequence whose s_1 is too small fails the check
    ThetaSeq bad = d;
    bad.seq.resize(2);
    bad.seq[1] = SeqTerm::of(10);
    WitnessCheck f = verify_witness(bad, 0);
    CHECK_FALSE(f.pass);
    CHECK(f.verdict == Verdict::GT);

    CHECK(SeqTerm::parse("7*2^5").value(64).approx() == 224.0);
    CHECK_THROWS_AS(SeqTerm::parse("x"), ParseError);
}

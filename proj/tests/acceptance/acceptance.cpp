// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "thetapow/approx.hpp"
#include "thetapow/gaps.hpp"
#include "thetapow/metric.hpp"
#include "thetapow/radical.hpp"

using namespace thetapow;

namespace {

// pinned tolerances and limits
constexpr double kC1Seconds = 30.0;
constexpr double kC3Ratio = 1.1;
constexpr double kC4Slope = -1.3;
constexpr double kC4Seconds = 120.0;
constexpr double kC7Lo = 0.29, kC7Hi = 0.51;
constexpr double kC8Seconds = 10.0;
constexpr std::size_t kC9MinExact = 10;
constexpr double kC9FrozenMedian = 3; // first certified run, matched by a 60-digit brute force
constexpr int kC10Trials = 10000;

const char* kPiMinus3 = "0.14159265358979323846264338327950288419716939937510582097494459";

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool le(const CertReal& a, const CertReal& b) { return compare_le(a, b) == Verdict::LE; }

Outcome c1() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    long violations = 0;
    double worst = 0;
    for (long x = 1; x <= 10000; ++x) {
        mpq_class xq(x);
        NextElement e = oracle_next_element(2, xq, default_oracle_cap(2, xq));
        // value is the integer u^2 + v^2; g - 1 < 2 sqrt2 x^(1/4)  <=>  g <= 1 or (g-1)^4 < 64 x
        mpz_class g = e.u * e.u + e.v * e.v - x;
        if (g > 1) {
            mpz_class t = g - 1;
            if (!(t * t * t * t < 64 * mpz_class(x))) ++violations;
        }
        worst = std::max(worst, g.get_d() / (2 * std::sqrt(2.0) * std::pow(double(x), 0.25) + 1));
    }
    double sec = seconds_since(t0);
    o.pass = violations == 0 && sec < kC1Seconds;
    o.detail << "violations=" << violations << " max gap/bound=" << worst << " time=" << sec << "s";
    return o;
}

Outcome c2() {
    Outcome o;
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<long> pick(10 * 1000, 1000000L * 1000);
    long violations = 0, undecided = 0;
    std::ostringstream first;
    for (const char* th : {"2", "3", "2.5"}) {
        mpq_class t = parse_rational(th);
        prec_t prec = 256;
        CertReal tc = CertReal::from_rational(t, prec);
        CertReal c = cr_pow(tc, CertReal::from_rational(2 - 1 / t, prec));
        for (int i = 0; i < 1000; ++i) {
            mpq_class x(pick(rng), 1000);
            x.canonicalize();
            GapWitness w = gap_element(t, x);
            CertReal bound = c * cr_pow(CertReal::from_rational(x, prec), CertReal::from_rational(psi(t), prec));
            Verdict v = compare_le(w.slack, bound);
            if (v == Verdict::GT && violations++ == 0)
                first << " first: theta=" << th << " x=" << x.get_str() << " (u,v)=(" << w.u << "," << w.v
                      << ") slack=" << w.slack.approx() << " bound=" << bound.approx();
            if (v == Verdict::UNDECIDED) ++undecided;
        }
    }
    o.pass = violations == 0 && undecided == 0;
    o.detail << "violations=" << violations << " undecided=" << undecided << " of 3000" << first.str();
    return o;
}

double oracle_gap_32(long x) {
    mpq_class t(3, 2), xq(x);
    NextElement e = oracle_next_element(t, xq, default_oracle_cap(t, xq));
    return (e.value - CertReal::from_int(x, e.value.prec())).approx();
}

Outcome c3() {
    Outcome o;
    double lo_max = 0, hi_max = 0;
    long lo_arg = 0, hi_arg = 0;
    for (long x = 100; x <= 10000; ++x) {
        double g = oracle_gap_32(x);
        if (g > lo_max) lo_max = g, lo_arg = x;
    }
    for (long j = 0; j < 1000; ++j) {
        long x = 10000 + 10 * j;
        double g = oracle_gap_32(x);
        if (g > hi_max) hi_max = g, hi_arg = x;
    }
    o.pass = lo_max <= kC3Ratio * hi_max;
    o.detail << "max[1e2,1e4]=" << lo_max << " at x=" << lo_arg << "; max[1e4,2e4]=" << hi_max << " at x=" << hi_arg
             << "; ratio=" << lo_max / hi_max;
    return o;
}

Outcome c4() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> xs, ys;
    long over = 0, undecided = 0;
    double C = 0;
    for (const std::string alpha : {"0", "0.5", "1/3", kPiMinus3}) {
        for (long n : {1L << 8, 1L << 10, 1L << 12, 1L << 14}) {
            ApproxCertificate c = approx_sum_roots(3, 2, alpha, n);
            if (c.constant) C = c.constant->approx();
            if (c.verdict == Verdict::GT) ++over;
            if (c.verdict == Verdict::UNDECIDED) ++undecided;
            double d = c.dist.approx();
            if (d > 0) {
                xs.push_back(std::log(double(n)));
                ys.push_back(std::log(d));
            }
        }
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size(), my /= ys.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) num += (xs[i] - mx) * (ys[i] - my), den += (xs[i] - mx) * (xs[i] - mx);
    double slope = num / den, sec = seconds_since(t0);
    o.pass = over == 0 && undecided == 0 && slope <= kC4Slope && sec < kC4Seconds;
    o.detail << "C=" << C << " bound violations=" << over << " undecided=" << undecided << " slope=" << slope
             << " time=" << sec << "s";
    return o;
}

Outcome c5() {
    Outcome o;
    std::mt19937_64 rng(5);
    long dom = 0, cb = 0, ob = 0;
    for (int i = 0; i < 100; ++i) {
        unsigned k = 1 + rng() % 2;
        long n = 2 + static_cast<long>(rng() % 63);
        std::string alpha = std::to_string(rng() % 10007) + "/10007";
        ApproxCertificate c = approx_sum_roots(k, 2, alpha, n);
        OracleSum s = oracle_min_sum(k, 2, parse_rational(alpha), n);
        if (compare_le(s.dist, c.dist) == Verdict::GT) ++dom;
        if (!c.bound || !le(c.dist, *c.bound)) ++cb;
        if (!c.bound || !le(s.dist, *c.bound)) ++ob;
    }
    o.pass = dom == 0 && cb == 0 && ob == 0;
    o.detail << "dominance violations=" << dom << " construction over bound=" << cb << " oracle over bound=" << ob;
    return o;
}

Outcome c6() {
    Outcome o;
    long violations = 0;
    auto check = [&](const RadicalBasis& b, long n) {
        SmallFrac s = find_small_fracpart(b, n);
        CertReal bound = CertReal::from_rational(pigeonhole_bound(b, n), s.frac.prec());
        if (!s.frac.certifies_positive() || !le(s.frac, bound) || s.w.height() > n) ++violations;
    };
    RadicalBasis b1 = build_basis(2, 1), b2 = build_basis(2, 2);
    for (long n = 2; n <= 4096; ++n) check(b1, n);
    for (long n : {2, 4, 8, 16}) check(b2, n);
    o.pass = violations == 0;
    o.detail << "violations=" << violations << " of 4099";
    return o;
}

Outcome c7() {
    Outcome o;
    RadicalBasis b = build_basis(2, 1);
    long outside = 0;
    o.detail << "n*dist:";
    for (long n = 2; n <= 4096; n *= 2) {
        double v = static_cast<double>(n) * min_nonzero_dist_oracle(b, n).dist.approx();
        if (v < kC7Lo || v > kC7Hi) ++outside;
        o.detail << " " << n << ":" << v;
    }
    o.pass = outside == 0;
    o.detail << " outside=" << outside;
    return o;
}

Outcome c8() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    ThetaConfig cfg;
    cfg.precision = Precision{512, 65536};
    ThetaSeq t = construct_theta(PhiSchedule::parse("exp_decay"), 1, 2, 2, cfg);
    bool s1 = t.seq.size() > 1 && t.seq[1].str() == "24";
    bool ok = s1;
    for (unsigned h : {0u, 1u}) {
        WitnessCheck w = verify_witness(t, h, Precision{512, 65536});
        ok = ok && w.pass && w.positive;
        o.detail << "h=" << h << (w.pass && w.positive ? " pass " : " fail ");
    }
    double sec = seconds_since(t0);
    o.pass = ok && sec < kC8Seconds;
    o.detail << "s_1=" << (t.seq.size() > 1 ? t.seq[1].str() : "?") << " time=" << sec << "s";
    return o;
}

Outcome c9() {
    Outcome o;
    CountResult a = count_solutions("3/2", 1, RhoSchedule::parse("const:1"), 100);
    std::size_t exact = std::count_if(a.records.begin(), a.records.end(), [](const SolutionRecord& r) { return r.exact; });
    std::mt19937_64 rng(9);
    std::vector<std::size_t> counts;
    std::size_t undecided = 0;
    for (int i = 0; i < 50; ++i) {
        long digits = 1100000 + static_cast<long>(rng() % 1800001);
        std::string theta = std::to_string(digits / 1000000) + "." + std::to_string(digits % 1000000 + 1000000).substr(1);
        CountResult c = count_solutions(theta, 1, RhoSchedule::parse("inv_log_sq"), 200);
        counts.push_back(c.records.size());
        undecided += c.undecided.size();
    }
    std::sort(counts.begin(), counts.end());
    double median = (counts[24] + counts[25]) / 2.0;
    bool frozen_ok = median == kC9FrozenMedian;
    o.pass = exact >= kC9MinExact && undecided == 0 && frozen_ok;
    o.detail << "exact records=" << exact << " median=" << median << " (min " << counts.front() << ", max "
             << counts.back() << ") undecided=" << undecided;
    return o;
}

Outcome c10() {
    Outcome o;
    std::mt19937_64 rng(10);
    long failures = 0;
    for (int i = 0; i < kC10Trials; ++i) {
        long num = static_cast<long>(rng() % 1000000) + 1, den = static_cast<long>(rng() % 9973) + 1;
        std::string q = std::to_string(num) + "/" + std::to_string(den);
        unsigned d = static_cast<unsigned>(rng() % 6) + 2;
        prec_t lo = 64 + static_cast<prec_t>(rng() % 64);
        CertReal coarse = cr_root(cr_from_decimal(q, lo), d);
        CertReal fine = cr_root(cr_from_decimal(q, 4 * lo), d);
        // nesting: the fine enclosure sits inside the coarse one
        if (!coarse.contains(fine)) ++failures;
        // x^(1/d) via pow agrees with the root
        CertReal p = cr_pow(cr_from_decimal(q, lo), cr_from_decimal("1/" + std::to_string(d), lo));
        if (!p.overlaps(fine)) ++failures;
        // fine^d contains x
        CertReal acc = fine;
        for (unsigned j = 1; j < d; ++j) acc = acc * fine;
        if (!acc.contains(cr_from_decimal(q, 4 * lo))) ++failures;
        // 2^(log2 x) contains x
        CertReal x = cr_from_decimal(q, lo);
        if (!cr_exp2(cr_log2(x)).overlaps(x)) ++failures;
    }
    o.pass = failures == 0;
    o.detail << "trials=" << kC10Trials << " containment failures=" << failures;
    return o;
}

} // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        if (!o.pass) ++failed;
        std::printf("CRITERION %zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

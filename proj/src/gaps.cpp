#include "thetapow/gaps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace thetapow {

namespace {

mpq_class frac_part(const mpq_class& a) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
    return a - mpq_class(f);
}

mpz_class floor_q(const mpq_class& a) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
    return f;
}

mpz_class ceil_q(const mpq_class& a) {
    mpz_class f;
    mpz_cdiv_q(f.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
    return f;
}

mpq_class exact_dist(const mpq_class& v) {
    mpq_class f = frac_part(v);
    return f <= mpq_class(1, 2) ? f : mpq_class(1) - f;
}

long double to_ld(const mpq_class& q) {
    return static_cast<long double>(q.get_num().get_d()) / static_cast<long double>(q.get_den().get_d());
}

void check_theta(const mpq_class& theta) {
    if (theta <= 0) throw DomainError("theta must be positive");
    if (!theta.get_num().fits_ulong_p() || !theta.get_den().fits_ulong_p())
        throw DomainError("theta numerator/denominator too large");
}

CertReal pow_rat(const mpq_class& base, const mpq_class& theta, prec_t prec) {
    if (base == 0) return CertReal(prec);
    if (auto e = exact_rational_power(base, theta)) return CertReal::from_rational(*e, prec);
    return cr_pow(CertReal::from_rational(base, prec), CertReal::from_rational(theta, prec));
}

// floor / ceil of base^e for rational base >= 0
mpz_class floor_pow(const mpq_class& base, const mpq_class& e, const Precision& p) {
    if (auto r = exact_rational_power(base, e)) return floor_q(*r);
    return refine(p, [&](prec_t prec) { return certified_floor(pow_rat(base, e, prec)); }, "floor of a power");
}

mpz_class ceil_pow(const mpq_class& base, const mpq_class& e, const Precision& p) {
    if (auto r = exact_rational_power(base, e)) return ceil_q(*r);
    return refine(p, [&](prec_t prec) { return certified_ceil(pow_rat(base, e, prec)); }, "ceil of a power");
}

RadicalForm pair_form(const mpz_class& u, const mpz_class& v, const mpq_class& theta) {
    const std::uint64_t p = theta.get_num().get_ui(), q = theta.get_den().get_ui();
    RadicalForm f(q);
    if (u > 0) f.add_power(u.get_ui(), p);
    if (v > 0) f.add_power(v.get_ui(), p);
    return f;
}

// sign of (s+t)^theta + (s-t)^theta - x
int sign_J(const mpq_class& theta, const mpz_class& s, const mpq_class& t, const mpq_class& x, const Precision& p) {
    auto a = exact_rational_power(mpq_class(s) + t, theta);
    auto b = exact_rational_power(mpq_class(s) - t, theta);
    if (a && b) {
        mpq_class d = *a + *b - x;
        return sgn(d);
    }
    return refine(p, [&](prec_t prec) -> std::optional<int> {
        CertReal d = I_theta(theta, s, t, prec) - CertReal::from_rational(x, prec);
        if (d.certifies_positive()) return 1;
        if (d.certifies_negative()) return -1;
        return std::nullopt;
    }, "sign of I(t) - x");
}

CertReal certified_dist_pair(long u, long v, const mpq_class& theta, const mpq_class& alpha, const Precision& p) {
    auto a = exact_rational_power(mpq_class(u), theta);
    auto b = exact_rational_power(mpq_class(v), theta);
    if (a && b) return CertReal::from_rational(exact_dist(*a + *b - alpha), p.start);
    CertReal last(p.start);
    for (prec_t prec = p.start; prec <= p.cap; prec *= 2) {
        CertReal s = pow_int(u, theta, prec) + pow_int(v, theta, prec) - CertReal::from_rational(alpha, prec);
        DistResult r = dist_nearest_int(s, mpq_class(1, 2));
        last = r.dist;
        if (r.positive) return r.dist;
    }
    return last;
}

} // namespace

const char* regime_name(Regime r) {
    switch (r) {
    case Regime::SUB1: return "SUB1";
    case Regime::ONE: return "ONE";
    case Regime::SUPER1: return "SUPER1";
    default: return "GE2";
    }
}

Regime regime_of(const mpq_class& theta) {
    if (theta <= 0) throw DomainError("theta must be positive");
    if (theta < 1) return Regime::SUB1;
    if (theta == 1) return Regime::ONE;
    if (theta < 2) return Regime::SUPER1;
    return Regime::GE2;
}

mpq_class psi(const mpq_class& theta) {
    switch (regime_of(theta)) {
    case Regime::ONE: return 0;
    case Regime::GE2: return 1 - 2 / theta + 1 / (theta * theta);
    default: return 1 - mpq_class(3, 2) / theta;
    }
}

CertReal pow_int(const mpz_class& u, const mpq_class& theta, prec_t prec) { return pow_rat(mpq_class(u), theta, prec); }

int compare_sum_pow(const mpz_class& u, const mpz_class& v, const mpq_class& theta, const mpq_class& x,
                    const Precision& p) {
    auto a = exact_rational_power(mpq_class(u), theta);
    auto b = exact_rational_power(mpq_class(v), theta);
    if (a && b) return sgn(*a + *b - x);
    // an irrational sum never equals the rational x
    return refine(p, [&](prec_t prec) -> std::optional<int> {
        CertReal d = pow_int(u, theta, prec) + pow_int(v, theta, prec) - CertReal::from_rational(x, prec);
        if (d.certifies_positive()) return 1;
        if (d.certifies_negative()) return -1;
        return std::nullopt;
    }, "u^theta + v^theta vs x");
}

CertReal I_theta(const mpq_class& theta, const mpz_class& s, const mpq_class& t, prec_t prec) {
    return pow_rat(mpq_class(s) + t, theta, prec) + pow_rat(mpq_class(s) - t, theta, prec);
}

GapInternals solve_k_theta(const mpq_class& theta, const mpq_class& x, const Precision& p) {
    check_theta(theta);
    Regime reg = regime_of(theta);
    if (reg != Regime::SUB1 && reg != Regime::SUPER1) throw DomainError("solve_k_theta needs theta in (0,1) u (1,2)");
    const bool inc = reg == Regime::SUPER1;
    const mpq_class inv = 1 / theta;
    GapInternals g;
    g.s = inc ? floor_pow(x / 2, inv, p) : ceil_pow(x / 2, inv, p);
    if (g.s < 1) throw DomainError("s_theta(x) < 1");

    auto st = exact_rational_power(mpq_class(g.s), theta);
    if (st) {
        mpq_class e = x - 2 * *st;
        g.E = CertReal::from_rational(e, p.start);
        g.E_zero = e == 0;
    } else {
        g.E = CertReal::from_rational(x, p.start) - pow_int(g.s, theta, p.start).mul_2exp(1);
    }
    if (g.E_zero) {
        g.l = 0;
        return g;
    }

    // J(0) = -E has the sign opposite to the one J must reach at t = s.
    const mpq_class sq(g.s);
    int end = sign_J(theta, g.s, sq, x, p);
    if ((inc && end < 0) || (!inc && end > 0)) throw DomainError("I(t) = x has no root on [0, s]");

    mpq_class lo = 0, hi = sq;
    const mpq_class width(1, 8);
    while (hi - lo >= width) {
        mpq_class mid = (lo + hi) / 2;
        int sg;
        try {
            sg = sign_J(theta, g.s, mid, x, p);
        } catch (const Undecided&) {
            break;
        }
        if (sg == 0) {
            lo = hi = mid;
            break;
        }
        if ((sg > 0) == inc) hi = mid;
        else lo = mid;
    }
    g.k_lo = lo;
    g.k_hi = hi;

    auto safe_sign = [&](const mpz_class& m) -> std::optional<int> {
        try {
            return sign_J(theta, g.s, mpq_class(m), x, p);
        } catch (const Undecided&) {
            return std::nullopt;
        }
    };
    if (inc) {
        mpz_class a = ceil_q(lo), b = ceil_q(hi);
        if (a == b) {
            g.l = a;
        } else {
            auto sg = safe_sign(a);
            if (!sg) g.l_safe_rounded = true;
            g.l = (sg && *sg >= 0) ? a : a + 1;
        }
    } else {
        mpz_class a = floor_q(lo), b = floor_q(hi);
        if (a == b) {
            g.l = a;
        } else {
            auto sg = safe_sign(b);
            if (!sg) g.l_safe_rounded = true;
            g.l = (sg && *sg >= 0) ? b : b - 1;
        }
    }
    if (g.l < 0) g.l = 0;
    if (g.l > g.s) g.l = g.s;
    return g;
}

long default_oracle_cap(const mpq_class& theta, const mpq_class& x) {
    long double r = powl(std::max(to_ld(x), 1.0L), 1.0L / to_ld(theta));
    if (r > 4e18L) throw CapExceeded("oracle cap overflows");
    return static_cast<long>(ceill(r)) + 2;
}

NextElement oracle_next_element(const mpq_class& theta, const mpq_class& x, long cap, const Precision& p) {
    check_theta(theta);
    if (cap < 0) throw DomainError("oracle cap must be >= 0");
    const long double th = to_ld(theta), xd = to_ld(x);
    const long double inv = 1.0L / th;
    const long double eps = 1e-12L * std::max(1.0L, fabsl(xd));
    auto pw = [&](long u) -> long double { return u == 0 ? 0.0L : powl(static_cast<long double>(u), th); };
    if (2 * pw(cap) < xd - eps) throw CapExceeded("oracle cap " + std::to_string(cap) + " too small for x");

    struct Cand {
        long u, v;
        long double val;
    };
    std::vector<Cand> cands;
    long double best = std::numeric_limits<long double>::infinity();
    for (long u = 0; u <= cap; ++u) {
        const long double tu = pw(u);
        if (2 * tu > best + 2 * eps) break;
        const long double rem = xd - tu;
        long v = u;
        if (rem > 0) v = std::max(u, static_cast<long>(floorl(powl(rem, inv))) - 1);
        while (v <= cap && tu + pw(v) < xd - eps) ++v;
        while (v > u && tu + pw(v - 1) >= xd - eps) --v;
        if (v > cap) continue;
        for (long vv = v; vv <= std::min(cap, v + 1); ++vv) {
            long double val = tu + pw(vv);
            bool definite = val >= xd + eps;
            if (val <= best + 2 * eps) cands.push_back({u, vv, val});
            if (definite) {
                best = std::min(best, val);
                break;
            }
        }
    }
    std::erase_if(cands, [&](const Cand& c) { return c.val > best + 2 * eps; });

    // certified feasibility
    std::vector<Cand> feasible;
    for (const auto& c : cands)
        if (compare_sum_pow(c.u, c.v, theta, x, p) >= 0) feasible.push_back(c);
    if (feasible.empty()) throw Error("oracle_next_element found no element");

    // merge provably equal values, preferring the larger min(u, v)
    std::vector<Cand> reps;
    std::vector<RadicalForm> rep_forms;
    for (const auto& c : feasible) {
        RadicalForm f = pair_form(c.u, c.v, theta);
        bool merged = false;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            if (rep_forms[i] == f) {
                if (c.u > reps[i].u) reps[i] = c;
                merged = true;
                break;
            }
        }
        if (!merged) {
            reps.push_back(c);
            rep_forms.push_back(f);
        }
    }
    return refine(p, [&](prec_t prec) -> std::optional<NextElement> {
        std::vector<CertReal> vals;
        for (const auto& c : reps) vals.push_back(pow_int(c.u, theta, prec) + pow_int(c.v, theta, prec));
        std::size_t arg = 0;
        for (std::size_t i = 1; i < vals.size(); ++i)
            if (mpfr_less_p(vals[i].mid().get(), vals[arg].mid().get())) arg = i;
        for (std::size_t i = 0; i < vals.size(); ++i)
            if (i != arg && !mpfr_less_p(vals[arg].upper().get(), vals[i].lower().get())) return std::nullopt;
        return NextElement{reps[arg].u, reps[arg].v, vals[arg]};
    }, "oracle_next_element minimum");
}

GapWitness gap_element(const std::string& theta, const std::string& x, const Precision& p) {
    GapWitness w = gap_element(parse_rational(theta), parse_rational(x), p);
    w.theta_text = theta;
    return w;
}

GapWitness gap_element(const mpq_class& theta, const mpq_class& x, const Precision& p) {
    check_theta(theta);
    if (x < 1) throw DomainError("gap_element needs x >= 1");
    GapWitness w;
    w.theta = theta;
    w.theta_text = theta.get_str();
    w.x = x;
    w.regime = regime_of(theta);
    w.psi = psi(theta);
    const mpq_class inv = 1 / theta;

    auto use_oracle = [&](const std::string& why) {
        NextElement e = oracle_next_element(theta, x, default_oracle_cap(theta, x), p);
        w.u = e.u;
        w.v = e.v;
        w.fallback = true;
        w.note = why;
    };

    switch (w.regime) {
    case Regime::ONE:
        w.u = ceil_q(x);
        w.v = 0;
        break;
    case Regime::SUB1:
    case Regime::SUPER1:
        try {
            GapInternals g = solve_k_theta(theta, x, p);
            w.u = g.s + g.l;
            w.v = g.s - g.l;
            w.internals = g;
            if (compare_sum_pow(w.u, w.v, theta, x, p) < 0) throw DomainError("construction fell below x");
        } catch (const DomainError& e) {
            w.internals.reset();
            use_oracle(std::string("construction unavailable: ") + e.what());
        }
        break;
    case Regime::GE2: {
        w.v = floor_pow(x, inv, p);
        auto vt = exact_rational_power(mpq_class(w.v), theta);
        if (vt) {
            mpq_class y = x - *vt;
            w.u = y == 0 ? mpz_class(0) : ceil_pow(y, inv, p);
        } else {
            w.u = refine(p, [&](prec_t prec) -> std::optional<mpz_class> {
                CertReal y = CertReal::from_rational(x, prec) - pow_int(w.v, theta, prec);
                if (!y.certifies_positive()) return std::nullopt;
                return certified_ceil(cr_pow(y, CertReal::from_rational(inv, prec)));
            }, "ceil((x - v^theta)^(1/theta))");
        }
        break;
    }
    }

    if (compare_sum_pow(w.u, w.v, theta, x, p) < 0) throw Error("gap witness below x");
    w.value = pow_int(w.u, theta, p.start) + pow_int(w.v, theta, p.start);
    w.slack = w.value - CertReal::from_rational(x, p.start);
    return w;
}

CertReal gap_constant(const mpq_class& theta, const Precision& p) {
    check_theta(theta);
    Regime reg = regime_of(theta);
    if (reg == Regime::GE2) {
        CertReal th = CertReal::from_rational(theta, p.start);
        return cr_pow(th, CertReal::from_rational(2 - 1 / theta, p.start));
    }
    if (reg == Regime::ONE) return CertReal::from_int(1, p.start);

    static std::mutex mu;
    static std::map<std::string, CertReal> memo;
    const std::string key = theta.get_str();
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
    }
    const mpq_class ps = psi(theta);
    Mpfr best(CertReal::kRadPrec);
    // x = 50j + 1/3 on [100, 10^4]; integer x are degenerate for theta = 1/m
    for (long j = 2; j < 200; ++j) {
        const mpq_class x = mpq_class(50 * j) + mpq_class(1, 3);
        GapWitness w = gap_element(theta, x, p);
        CertReal r = w.slack / pow_rat(x, ps, p.start);
        Mpfr up = r.upper();
        if (mpfr_greater_p(up.get(), best.get())) mpfr_set(best.get(), up.get(), MPFR_RNDU);
    }
    CertReal c = CertReal::from_mpfr(best, p.start);
    std::lock_guard<std::mutex> lock(mu);
    memo.emplace(key, c);
    return c;
}

CertReal gap_bound(const mpq_class& theta, const mpq_class& x, const Precision& p) {
    return gap_constant(theta, p) * pow_rat(x, psi(theta), p.start);
}

TwoPowers oracle_two_powers(const mpq_class& theta, const mpq_class& alpha, long n, const Precision& p) {
    check_theta(theta);
    if (n < 1) throw DomainError("oracle_two_powers needs n >= 1");
    const long double th = to_ld(theta), fa = to_ld(frac_part(alpha));
    std::vector<long double> pw(n + 1);
    for (long u = 1; u <= n; ++u) pw[u] = powl(static_cast<long double>(u), th);
    const long double eps = 1e-12L * std::max(1.0L, 2 * pw[n]);
    long double best = 1;
    std::vector<std::pair<long, long>> cands;
    std::vector<long double> cd;
    for (long u = 1; u <= n; ++u)
        for (long v = u; v <= n; ++v) {
            long double s = pw[u] + pw[v] - fa;
            long double d = fabsl(s - nearbyintl(s));
            if (d <= best + 2 * eps) {
                best = std::min(best, d);
                cands.emplace_back(u, v);
                cd.push_back(d);
            }
        }
    std::vector<std::pair<long, long>> keep;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cd[i] <= best + 2 * eps) keep.push_back(cands[i]);

    std::vector<std::pair<long, long>> reps;
    std::vector<RadicalForm> forms;
    for (auto c : keep) {
        RadicalForm f = pair_form(c.first, c.second, theta);
        f.add_rational(-alpha);
        bool merged = false;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            RadicalForm a = f, b = f;
            a.add(forms[i], -1);
            b.add(forms[i], 1);
            if (a.is_integer() || b.is_integer()) {
                if (c > reps[i]) {
                    reps[i] = c;
                    forms[i] = f;
                }
                merged = true;
                break;
            }
        }
        if (!merged) {
            reps.push_back(c);
            forms.push_back(f);
        }
    }
    TwoPowers out;
    out.fallback = true;
    auto pick = refine(p, [&](prec_t prec) -> std::optional<std::pair<std::size_t, CertReal>> {
        std::vector<CertReal> ds;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            if (forms[i].is_rational()) {
                ds.push_back(CertReal::from_rational(exact_dist(forms[i].rational_part()), prec));
            } else {
                CertReal s = pow_int(reps[i].first, theta, prec) + pow_int(reps[i].second, theta, prec) -
                             CertReal::from_rational(alpha, prec);
                ds.push_back(dist_nearest_int(s, mpq_class(1, 2)).dist);
            }
        }
        std::size_t arg = 0;
        for (std::size_t i = 1; i < ds.size(); ++i)
            if (mpfr_less_p(ds[i].mid().get(), ds[arg].mid().get())) arg = i;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (i != arg && !mpfr_less_p(ds[arg].upper().get(), ds[i].lower().get())) return std::nullopt;
        return std::make_pair(arg, ds[arg]);
    }, "oracle_two_powers minimum");
    out.u = reps[pick.first].first;
    out.v = reps[pick.first].second;
    out.dist = pick.second;
    return out;
}

TwoPowers approx_two_powers(const std::string& theta_text, const std::string& alpha_text, long n, const Precision& p) {
    const mpq_class theta = parse_rational(theta_text);
    const mpq_class alpha = parse_rational(alpha_text);
    check_theta(theta);
    if (!((theta > 0 && theta < 1) || (theta > 1 && theta < mpq_class(3, 2)) || theta == 1))
        throw DomainError("approx_two_powers needs theta in (0,1) u (1,3/2)");
    if (n < 1) throw DomainError("approx_two_powers needs n >= 1");

    TwoPowers out;
    if (theta == 1) {
        out.u = out.v = 1;
        out.dist = CertReal::from_rational(exact_dist(2 - alpha), p.start);
        out.bound = CertReal::from_rational(mpq_class(1, 2), p.start);
        out.verdict = compare_le(out.dist, *out.bound);
        out.note = "theta = 1: integer sums, distance ||alpha||";
        return out;
    }

    // n^theta >= 5 ?
    int big = compare_sum_pow(n, 0, theta, mpq_class(5), p);
    bool constructed = false;
    if (big >= 0) {
        const mpq_class fa = frac_part(alpha);
        // m = ceil(n^theta / 5 - {alpha})
        mpz_class m;
        if (auto e = exact_rational_power(mpq_class(n), theta)) {
            m = ceil_q(*e / 5 - fa);
        } else {
            m = refine(p, [&](prec_t prec) {
                return certified_ceil(pow_int(n, theta, prec) / CertReal::from_int(5, prec) -
                                      CertReal::from_rational(fa, prec));
            }, "lift of alpha");
        }
        out.alpha_star = mpq_class(m) + fa;
        GapWitness w = gap_element(theta, out.alpha_star, p);
        long u = w.u.fits_slong_p() ? w.u.get_si() : n + 1;
        long v = w.v.fits_slong_p() ? w.v.get_si() : n + 1;
        if (u == 0 || v == 0) {
            out.single_power = true;
            u = std::max(u, v);
            v = 1;
        }
        if (u >= 1 && v >= 1 && u <= n && v <= n) {
            out.u = u;
            out.v = v;
            out.dist = certified_dist_pair(u, v, theta, alpha, p);
            out.note = w.fallback ? "gap witness from oracle" : "gap construction";
            constructed = true;
        } else {
            out.note = "gap witness outside [1, n]; ";
        }
    } else {
        out.note = "n^theta < 5; ";
    }
    if (!constructed) {
        TwoPowers o = oracle_two_powers(theta, alpha, n, p);
        o.note = out.note + "exhaustive oracle used";
        out = o;
    }

    CertReal D = gap_constant(theta, p);
    CertReal five = CertReal::from_int(5, p.start);
    out.bound = D * cr_pow(five, CertReal::from_rational(mpq_class(3, 2) / theta - 1, p.start)) *
                pow_rat(mpq_class(n), theta - mpq_class(3, 2), p.start);
    out.verdict = compare_le(out.dist, *out.bound);
    return out;
}

} // namespace thetapow

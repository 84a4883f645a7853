#include "thetapow/approx.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace thetapow {

const char* const kPiMinus3 = "0.1415926535897932384626433832795028841972";

namespace {

mpq_class frac_part(const mpq_class& a) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
    return a - mpq_class(f);
}

mpq_class exact_dist(const mpq_class& v) {
    mpq_class f = frac_part(v);
    return f <= mpq_class(1, 2) ? f : mpq_class(1) - f;
}

// Certified ||x|| for an exact element of Q + S_xi, refined until it
// excludes 0 or is recognised as exactly 0.
CertReal certified_dist(const Affine& x, const Precision& p) {
    RadicalForm f = x.form();
    if (f.is_rational()) return CertReal::from_rational(exact_dist(f.rational_part()), p.start);
    CertReal last(p.start);
    for (prec_t prec = p.start; prec <= p.cap; prec *= 2) {
        DistResult r = dist_nearest_int(x.eval(prec), mpq_class(1, 2));
        last = r.dist;
        if (r.positive) return r.dist;
    }
    return last;
}

std::uint64_t count_multisets(long n, unsigned k, std::uint64_t cap) {
    // C(n+k-1, k)
    unsigned __int128 c = 1;
    for (unsigned i = 1; i <= k; ++i) {
        c = c * static_cast<unsigned __int128>(n + i - 1) / i;
        if (c > cap) return 0;
    }
    return static_cast<std::uint64_t>(c);
}

} // namespace

unsigned xi_for(unsigned k, unsigned d) {
    unsigned xi = 0;
    unsigned long long pw = d;
    while (pw <= k + 1ULL) {
        ++xi;
        pw *= d;
    }
    return xi;
}

mpq_class gamma(unsigned k, unsigned d) {
    unsigned xi = xi_for(k, d);
    mpz_class pw;
    mpz_ui_pow_ui(pw.get_mpz_t(), d, xi);
    mpq_class g(pw - 1, d);
    g.canonicalize();
    return g;
}

mpq_class gamma_lower(unsigned k, unsigned d) {
    mpq_class g(static_cast<long>(k) - static_cast<long>(d) + 1, static_cast<unsigned long>(d) * d);
    g.canonicalize();
    return g;
}

mpq_class gamma_star(unsigned k, unsigned d) {
    mpq_class inv(1, d);
    if (k == 1) return 1 - inv;
    mpq_class two = mpq_class(3, 2) - inv;
    if (k == 2) return two;
    mpq_class g = gamma(k, d);
    return g > two ? g : two;
}

CertReal Affine::eval(prec_t prec) const { return CertReal::from_rational(q, prec) + eval_radical_sum(w, prec); }

RadicalForm Affine::form() const {
    RadicalForm f = radical_form(w);
    f.add_rational(q);
    return f;
}

SingleResult approx_single(const mpq_class& theta, const std::string& alpha_text, long n, const Precision& p) {
    if (theta <= 0 || theta >= 1) throw DomainError("approx_single needs 0 < theta < 1");
    if (n < 2) throw DomainError("approx_single needs n >= 2");
    const mpq_class alpha = parse_rational(alpha_text);
    const mpq_class fa = frac_part(alpha);
    const mpq_class inv = 1 / theta;
    const mpq_class nq(n);

    mpz_class F;
    if (auto e = exact_rational_power(nq, theta)) {
        mpz_fdiv_q(F.get_mpz_t(), e->get_num_mpz_t(), e->get_den_mpz_t());
    } else {
        F = refine(p, [&](prec_t prec) {
            return certified_floor(cr_pow(CertReal::from_int(n, prec), CertReal::from_rational(theta, prec)));
        }, "floor(n^theta)");
    }
    if (F < 2) throw DomainError("approx_single needs n^theta >= 2");

    SingleResult out;
    out.level = F - 1;
    const mpq_class t = mpq_class(out.level) + fa;
    mpz_class a;
    if (auto r = exact_rational_power(t, inv)) {
        mpz_cdiv_q(a.get_mpz_t(), r->get_num_mpz_t(), r->get_den_mpz_t());
    } else {
        a = refine(p, [&](prec_t prec) {
            return certified_ceil(cr_pow(CertReal::from_rational(t, prec), CertReal::from_rational(inv, prec)));
        }, "ceil(r_theta)");
    }
    out.a = a.get_si();

    auto exact_val = exact_rational_power(mpq_class(a), theta);
    for (prec_t prec = p.start;; prec *= 2) {
        if (prec > p.cap) prec = p.cap;
        CertReal th = CertReal::from_rational(theta, prec);
        out.bound = th * cr_pow(CertReal::from_int(3, prec), CertReal::from_rational(inv - 1, prec)) *
                    cr_pow(CertReal::from_int(n, prec), CertReal::from_rational(theta - 1, prec));
        if (exact_val) {
            out.dist = CertReal::from_rational(exact_dist(*exact_val - alpha), prec);
        } else {
            CertReal x = cr_pow(CertReal::from_mpz(a, prec), th) - CertReal::from_rational(alpha, prec);
            out.dist = dist_nearest_int(x, out.bound).dist;
        }
        out.verdict = compare_le(out.dist, out.bound);
        out.precision = prec;
        if (out.verdict != Verdict::UNDECIDED || prec >= p.cap) break;
    }
    return out;
}

ChainResult greedy_chain(const RadicalBasis& b, const Affine& alpha0, long budget, const SearchConfig& cfg) {
    const Precision& p = cfg.precision;
    const std::size_t D = b.size();
    ChainResult res;
    res.omega = RadicalSum::zero(b);
    res.residual = alpha0;
    if (res.residual.w.coeffs.empty()) res.residual.w = RadicalSum::zero(b);

    auto residual_is_zero = [&] {
        RadicalForm f = res.residual.form();
        return f.is_rational() && f.rational_part() == 0;
    };

    for (unsigned j = 1;; ++j) {
        if (residual_is_zero()) {
            res.stop_reason = "residual is zero";
            break;
        }
        if (j >= 62 || (1L << j) > budget) {
            res.stop_reason = "level height exceeds budget";
            break;
        }
        const long ln = 1L << j;
        unsigned __int128 pts = 1;
        bool over = false;
        for (std::size_t i = 0; i < D && !over; ++i) {
            pts *= static_cast<unsigned __int128>(ln + 1);
            over = pts > cfg.enum_cap;
        }
        if (over) {
            res.stop_reason = "enumeration cap";
            break;
        }

        ChainLevel lvl;
        lvl.level_n = ln;
        SmallFrac sf = find_small_fracpart(b, ln, cfg);
        lvl.x = sf.w;
        lvl.frac = sf.frac;

        // y = floor(residual / {x}); a straddle that is not an exact multiple costs one unit.
        long long y = 0;
        for (prec_t prec = std::max<prec_t>(p.start, 128);; prec *= 2) {
            if (prec > p.cap) prec = p.cap;
            CertReal ratio = res.residual.eval(prec) / eval_radical_sum(lvl.x, prec);
            if (auto fl = certified_floor(ratio)) {
                y = fl->get_si();
                break;
            }
            mpz_class m;
            mpfr_get_z(m.get_mpz_t(), ratio.upper().get(), MPFR_RNDD);
            RadicalForm diff = res.residual.form();
            diff.add(radical_form(lvl.x), -mpq_class(m));
            if (diff.is_rational() && diff.rational_part() == 0) {
                y = m.get_si();
                break;
            }
            if (prec >= p.cap || prec >= 8192) {
                mpz_class lo;
                mpfr_get_z(lo.get_mpz_t(), ratio.lower().get(), MPFR_RNDD);
                y = std::max<long>(0, lo.get_si());
                break;
            }
        }
        if (y < 0) y = 0;

        auto height_with = [&](long long yy) { return (res.omega + lvl.x.scaled(yy)).height(); };
        if (height_with(y) > budget) {
            long long lo = 0, hi = y;
            while (lo < hi) {
                long long mid = lo + (hi - lo + 1) / 2;
                if (height_with(mid) <= budget) lo = mid;
                else hi = mid - 1;
            }
            y = lo;
            lvl.clamped = true;
        }
        lvl.y = y;
        if (y != 0) {
            res.omega = res.omega + lvl.x.scaled(y);
            res.residual.w = res.residual.w + (-lvl.x.scaled(y));
        }
        // residual must stay >= 0
        if (!residual_is_zero()) {
            refine(p, [&](prec_t prec) -> std::optional<bool> {
                CertReal r = res.residual.eval(prec);
                if (r.certifies_negative()) throw Error("greedy residual became negative");
                if (r.certifies_positive()) return true;
                return std::nullopt;
            }, "greedy residual sign");
        }
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 2, static_cast<unsigned long>(j) * D);
        res.level_bound = mpq_class(mpz_class(1), den);
        res.levels.push_back(std::move(lvl));
    }
    prec_t prec = std::max<prec_t>(p.start, 128);
    res.residual_value = residual_is_zero() ? CertReal(prec) : res.residual.eval(prec);
    return res;
}

ShiftResult positive_shift(const RadicalBasis& b, const mpq_class& alpha, long n, const SearchConfig& cfg) {
    if (n < 6) throw DomainError("positive_shift needs n >= 6");
    ShiftResult out;
    out.half = n / 2;
    out.budget = n / 3;

    Affine a0;
    a0.q = alpha;
    a0.w = RadicalSum::zero(b);
    for (auto& c : a0.w.coeffs) c = -out.half;
    mpz_class fl = refine(cfg.precision, [&](prec_t prec) { return certified_floor(a0.eval(prec)); }, "floor(alpha - rho)");
    a0.w.offset = fl;

    out.chain = greedy_chain(b, a0, out.budget, cfg);
    out.coeffs.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out.coeffs[i] = out.half + out.chain.omega.coeffs[i];

    Affine s;
    s.q = -alpha;
    s.w = RadicalSum::zero(b);
    s.w.coeffs = out.coeffs;
    out.dist = certified_dist(s, cfg.precision);
    return out;
}

OracleSum oracle_min_sum(unsigned k, unsigned d, const mpq_class& alpha, long n, const SearchConfig& cfg,
                         bool exclude_exact) {
    if (k < 1 || d < 2 || n < 1) throw DomainError("oracle_min_sum needs k >= 1, d >= 2, n >= 1");
    if (count_multisets(n, k, cfg.enum_cap) == 0)
        throw CapExceeded("oracle enumeration C(n+k-1,k) exceeds cap " + std::to_string(cfg.enum_cap));

    const mpq_class fa = frac_part(alpha);
    const long double fa_ld = static_cast<long double>(fa.get_d());
    std::vector<long double> root(n + 1);
    std::vector<char> perfect(n + 1, 0);
    for (long v = 1; v <= n; ++v) {
        long double x = static_cast<long double>(v);
        root[v] = d == 2 ? sqrtl(x) : (d == 3 ? cbrtl(x) : powl(x, 1.0L / d));
        mpz_class r;
        perfect[v] = mpz_root(r.get_mpz_t(), mpz_class(v).get_mpz_t(), d) != 0;
    }
    const long double eps = 1e-12L;

    long double best = 1.0L;
    std::vector<std::pair<long double, std::vector<long>>> cands;
    std::vector<long> cur(k, 1);
    std::vector<long double> partial(k + 1, 0.0L);
    // iterate nondecreasing tuples
    std::size_t pos = 0;
    cur[0] = 1;
    while (true) {
        for (; pos < k; ++pos) {
            if (pos > 0) cur[pos] = std::max(cur[pos], cur[pos - 1]);
            partial[pos + 1] = partial[pos] + root[cur[pos]];
        }
        bool skip = false;
        if (exclude_exact && fa == 0) {
            skip = std::all_of(cur.begin(), cur.end(), [&](long v) { return perfect[v] != 0; });
        }
        if (!skip) {
            long double v = partial[k] - fa_ld;
            long double dd = fabsl(v - nearbyintl(v));
            if (dd <= best + 2 * eps) {
                if (dd < best) best = dd;
                cands.emplace_back(dd, cur);
                if (cands.size() > 4096) {
                    std::erase_if(cands, [&](const auto& c) { return c.first > best + 2 * eps; });
                }
            }
        }
        // advance
        std::size_t i = k;
        while (i > 0 && cur[i - 1] == n) --i;
        if (i == 0) break;
        ++cur[i - 1];
        for (std::size_t j = i; j < k; ++j) cur[j] = cur[i - 1];
        pos = i - 1;
    }
    std::erase_if(cands, [&](const auto& c) { return c.first > best + 2 * eps; });
    if (cands.empty()) throw Error("oracle_min_sum found no admissible multiset");

    // exact forms F = sum b^(1/d) - alpha
    std::vector<RadicalForm> forms;
    for (auto& c : cands) {
        RadicalForm f(d);
        for (long v : c.second) f.add_power(static_cast<std::uint64_t>(v), 1);
        f.add_rational(-alpha);
        forms.push_back(f);
    }
    // merge candidates whose distances are provably equal; keep the lexicographically largest
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        bool merged = false;
        for (auto& r : reps) {
            RadicalForm a = forms[i], s = forms[i];
            a.add(forms[r], -1);
            s.add(forms[r], 1);
            if (a.is_integer() || s.is_integer()) {
                if (cands[i].second > cands[r].second) r = i;
                merged = true;
                break;
            }
        }
        if (!merged) reps.push_back(i);
    }

    auto dist_of = [&](std::size_t i, prec_t prec) {
        if (forms[i].is_rational()) return CertReal::from_rational(exact_dist(forms[i].rational_part()), prec);
        CertReal s = CertReal::from_rational(-alpha, prec);
        for (long v : cands[i].second) s = s + root_of(static_cast<std::uint64_t>(v), d, prec);
        return dist_nearest_int(s, mpq_class(1, 2)).dist;
    };
    return refine(cfg.precision, [&](prec_t prec) -> std::optional<OracleSum> {
        std::vector<CertReal> ds;
        for (auto r : reps) ds.push_back(dist_of(r, prec));
        std::size_t arg = 0;
        for (std::size_t i = 1; i < ds.size(); ++i)
            if (mpfr_less_p(ds[i].mid().get(), ds[arg].mid().get())) arg = i;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (i != arg && !mpfr_less_p(ds[arg].upper().get(), ds[i].lower().get())) return std::nullopt;
        return OracleSum{cands[reps[arg]].second, ds[arg]};
    }, "oracle_min_sum minimum");
}

ApproxCertificate construct_sum_roots(unsigned k, unsigned d, const mpq_class& alpha, long n, const ApproxConfig& cfg) {
    if (k < 1) throw DomainError("approx needs k >= 1");
    if (d < 2) throw DomainError("approx needs d >= 2");
    if (n < 1) throw DomainError("approx needs n >= 1");
    ApproxCertificate c;
    c.k = k;
    c.d = d;
    c.n = n;
    c.xi = xi_for(k, d);
    c.exponent = gamma(k, d);
    c.precision = cfg.search.precision.start;

    if (c.xi == 0) {
        c.b.assign(k, 1);
        c.dist = CertReal::from_rational(exact_dist(mpq_class(k) - alpha), c.precision);
        c.note = "k + 1 < d: exponent 0, all b = 1";
        return c;
    }
    unsigned limit = d == 2 ? cfg.max_xi_d2 : cfg.max_xi_other;
    if (c.xi > limit)
        throw CapExceeded("xi = " + std::to_string(c.xi) + " exceeds the basis cap " + std::to_string(limit) +
                          " for d = " + std::to_string(d));
    RadicalBasis basis = build_basis(d, c.xi, cfg.search.basis_cap);
    const std::uint64_t P = basis.product();
    const unsigned __int128 threshold = (static_cast<unsigned __int128>(1) << d) * P;

    auto use_oracle = [&](const std::string& why) {
        OracleSum o = oracle_min_sum(k, d, alpha, n, cfg.search);
        c.b = o.b;
        c.dist = o.dist;
        c.fallback = true;
        c.note = why;
        return c;
    };
    if (static_cast<unsigned __int128>(n) < threshold) return use_oracle("n below 2^d * prod p_j^(d-1); oracle used");
    c.reduced_n = integer_root(mpz_class(n / static_cast<long>(P)), d).get_si();
    if (c.reduced_n < 6) return use_oracle("reduced height below 6; oracle used");

    ShiftResult sh = positive_shift(basis, alpha, c.reduced_n, cfg.search);
    c.shift_coeffs = sh.coeffs;
    c.b.assign(k + 1 - (basis.size() + 1), 1);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        mpz_class v;
        mpz_ui_pow_ui(v.get_mpz_t(), static_cast<unsigned long>(sh.coeffs[i]), d);
        v *= static_cast<unsigned long>(basis.elements[i]);
        if (v > n) throw Error("converted radical exceeds n");
        c.b.push_back(v.get_si());
    }
    std::sort(c.b.begin(), c.b.end());
    c.dist = sh.dist;
    c.note = sh.chain.stop_reason;
    return c;
}

std::optional<CertReal> calibrated_constant(unsigned k, unsigned d, const ApproxConfig& cfg) {
    static std::mutex mu;
    static std::map<std::pair<unsigned, unsigned>, std::optional<CertReal>> memo;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = memo.find({k, d});
        if (it != memo.end()) return it->second;
    }
    const long n = 256;
    const char* grid[] = {"0", "1/2", "1/3", kPiMinus3};
    std::optional<CertReal> result;
    try {
        const prec_t prec = cfg.search.precision.start;
        const mpq_class g = gamma(k, d);
        Mpfr best(CertReal::kRadPrec);
        for (const char* a : grid) {
            ApproxCertificate c = construct_sum_roots(k, d, parse_rational(a), n, cfg);
            CertReal scaled = c.dist * cr_pow(CertReal::from_int(n, prec), CertReal::from_rational(g, prec));
            Mpfr up = scaled.upper();
            if (mpfr_greater_p(up.get(), best.get())) mpfr_set(best.get(), up.get(), MPFR_RNDU);
        }
        result = CertReal::from_mpfr(best, prec);
    } catch (const CapExceeded&) {
        result.reset();
    }
    std::lock_guard<std::mutex> lock(mu);
    memo[{k, d}] = result;
    return result;
}

ApproxCertificate approx_sum_roots(unsigned k, unsigned d, const std::string& alpha, long n, const ApproxConfig& cfg) {
    ApproxCertificate c = construct_sum_roots(k, d, parse_rational(alpha), n, cfg);
    c.alpha = alpha;
    if (c.xi == 0) {
        c.constant = CertReal::from_rational(mpq_class(1, 2), c.precision);
        c.bound = c.constant;
        c.verdict = compare_le(c.dist, *c.bound);
        return c;
    }
    c.constant = calibrated_constant(k, d, cfg);
    if (!c.constant) {
        c.verdict = Verdict::UNDECIDED;
        c.note += "; calibration unavailable";
        return c;
    }
    const Precision& p = cfg.search.precision;
    for (prec_t prec = p.start;; prec *= 2) {
        if (prec > p.cap) prec = p.cap;
        c.bound = *c.constant * cr_pow(CertReal::from_int(n, prec), CertReal::from_rational(-c.exponent, prec));
        c.verdict = compare_le(c.dist, *c.bound);
        c.precision = prec;
        if (c.verdict != Verdict::UNDECIDED || prec >= p.cap || prec >= 4 * p.start) break;
    }
    return c;
}

} // namespace thetapow

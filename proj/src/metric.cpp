#include "thetapow/metric.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "thetapow/gaps.hpp"
#include "thetapow/radical.hpp"

namespace thetapow {

namespace {

std::string after_colon(const std::string& text, const std::string& head) {
    if (text.size() <= head.size() + 1 || text[head.size()] != ':')
        throw ParseError("schedule '" + text + "' needs a parameter: " + head + ":<value>");
    return text.substr(head.size() + 1);
}

bool starts_with(const std::string& s, const std::string& p) { return s.compare(0, p.size(), p) == 0; }

long double to_ld(const mpq_class& q) {
    // keep the 64-bit mantissa when numerator and denominator fit
    mpz_class n = abs(q.get_num());
    const mpz_class& d = q.get_den();
    long double v;
    if (n.fits_ulong_p() && d.fits_ulong_p())
        v = static_cast<long double>(n.get_ui()) / static_cast<long double>(d.get_ui());
    else
        v = static_cast<long double>(q.get_d());
    return q < 0 ? -v : v;
}

// Screening margin for long double evaluations. Values within it of the
// threshold are certified; the rest are decided by the float value.
long double margin_for(long double f) { return 1e-9L * std::max(1.0L, f); }

// Calls fn(tuple) for every a_1 <= ... <= a_{k-1} <= m, tuple[k-1] = m.
template <class F>
void for_each_tuple(unsigned k, long m, F&& fn) {
    std::vector<long> t(k, 1);
    t[k - 1] = m;
    if (k == 1) {
        fn(t);
        return;
    }
    for (;;) {
        fn(t);
        int i = static_cast<int>(k) - 2;
        while (i >= 0 && t[i] == m) --i;
        if (i < 0) return;
        ++t[i];
        for (unsigned j = i + 1; j + 1 < k; ++j) t[j] = t[i];
    }
}

mpz_class tuples_with_max(unsigned k, long m) {
    mpz_class c;
    mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(m + k - 2), k - 1);
    return c;
}

CertReal threshold_of(const RhoSchedule& rho, long m, unsigned k, prec_t prec) {
    mpz_class mk;
    mpz_ui_pow_ui(mk.get_mpz_t(), static_cast<unsigned long>(m), k);
    return rho.eval(m, prec) / CertReal::from_mpz(mk, prec);
}

CertReal sum_powers(const std::vector<long>& t, const mpq_class& theta, prec_t prec) {
    CertReal s = CertReal::from_int(0, prec);
    for (long a : t) s = s + pow_int(mpz_class(a), theta, prec);
    return s;
}

// Certified check ||sum a^theta|| <= threshold; nullopt when undecided at the cap.
std::optional<SolutionRecord> certify(const std::vector<long>& t, const mpq_class& theta, const RhoSchedule& rho,
                                      const Precision& p, bool& undecided) {
    undecided = false;
    unsigned k = static_cast<unsigned>(t.size());
    long m = t.back();
    SolutionRecord rec;
    for (prec_t prec = p.start;; prec *= 2) {
        if (prec > p.cap) prec = p.cap;
        CertReal f = sum_powers(t, theta, prec);
        CertReal thr = threshold_of(rho, m, k, prec);
        DistResult d = dist_nearest_int(f, thr);
        if (d.verdict == Verdict::GT) return std::nullopt;
        if (d.verdict == Verdict::LE) {
            rec.omega = t;
            rec.m = m;
            rec.b = d.nearest;
            rec.residual = d.dist;
            rec.threshold = thr;
            rec.exact = d.dist.is_exact() && mpfr_zero_p(d.dist.mid().get());
            return rec;
        }
        if (prec >= p.cap) {
            rec.omega = t;
            rec.m = m;
            rec.b = d.nearest;
            rec.residual = d.dist;
            rec.threshold = thr;
            undecided = true;
            return rec;
        }
    }
}

template <class Work>
void run_parallel(unsigned threads, Work&& work) {
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0u, 1u);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(threads);
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                work(w, threads);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

bool record_less(const SolutionRecord& a, const SolutionRecord& b) {
    if (a.m != b.m) return a.m < b.m;
    return a.omega < b.omega;
}

long to_long_checked(const mpz_class& v, const char* what) {
    if (!v.fits_slong_p()) throw DepthUnreachable(std::string(what) + " does not fit in a machine integer");
    return v.get_si();
}

} // namespace

// ---- schedules

RhoSchedule RhoSchedule::parse(const std::string& text) {
    RhoSchedule r;
    if (text == "inv_log_sq") {
        r.kind = Kind::InvLogSq;
        r.param = 0;
    } else if (starts_with(text, "const")) {
        r.kind = Kind::Const;
        r.param = text == "const" ? mpq_class(1) : parse_rational(after_colon(text, "const"));
        if (r.param < 0) throw ParseError("const rho must be >= 0");
    } else if (starts_with(text, "power")) {
        r.kind = Kind::Power;
        r.param = parse_rational(after_colon(text, "power"));
    } else {
        throw ParseError("unknown rho schedule '" + text + "' (const:c, inv_log_sq, power:p)");
    }
    return r;
}

std::string RhoSchedule::str() const {
    switch (kind) {
    case Kind::Const: return "const:" + param.get_str();
    case Kind::InvLogSq: return "inv_log_sq";
    case Kind::Power: return "power:" + param.get_str();
    }
    return "?";
}

CertReal RhoSchedule::eval(long m, prec_t prec) const {
    if (m < 1) throw DomainError("rho(m) needs m >= 1");
    switch (kind) {
    case Kind::Const: return CertReal::from_rational(param, prec);
    case Kind::InvLogSq: {
        CertReal l = cr_log(CertReal::from_int(m + 1, prec));
        return CertReal::from_int(1, prec) / (l * l);
    }
    case Kind::Power:
        if (auto e = exact_rational_power(mpq_class(m), -param)) return CertReal::from_rational(*e, prec);
        return cr_pow(CertReal::from_int(m, prec), CertReal::from_rational(-param, prec));
    }
    throw Error("bad rho schedule");
}

long double RhoSchedule::approx(long m) const {
    switch (kind) {
    case Kind::Const: return to_ld(param);
    case Kind::InvLogSq: {
        long double l = std::log(static_cast<long double>(m + 1));
        return 1.0L / (l * l);
    }
    case Kind::Power: return std::pow(static_cast<long double>(m), -to_ld(param));
    }
    return 0;
}

PhiSchedule PhiSchedule::parse(const std::string& text) {
    PhiSchedule p;
    if (text == "exp_decay") {
        p.kind = Kind::ExpDecay;
    } else if (starts_with(text, "power")) {
        p.kind = Kind::Power;
        p.param = parse_rational(after_colon(text, "power"));
        if (p.param < 0) throw ParseError("power Phi needs p >= 0");
    } else if (starts_with(text, "table")) {
        p.kind = Kind::Table;
        std::stringstream ss(after_colon(text, "table"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            mpq_class v = parse_rational(item);
            if (v <= 0) throw ParseError("Phi table values must be positive");
            p.table.push_back(v);
        }
        if (p.table.empty()) throw ParseError("empty Phi table");
    } else {
        throw ParseError("unknown Phi schedule '" + text + "' (exp_decay, power:p, table:v0,v1,...)");
    }
    return p;
}

std::string PhiSchedule::str() const {
    switch (kind) {
    case Kind::ExpDecay: return "exp_decay";
    case Kind::Power: return "power:" + param.get_str();
    case Kind::Table: {
        std::string s = "table:";
        for (std::size_t i = 0; i < table.size(); ++i) s += (i ? "," : "") + table[i].get_str();
        return s;
    }
    }
    return "?";
}

CertReal PhiSchedule::log2_at(const mpz_class& P, unsigned h, prec_t prec) const {
    switch (kind) {
    case Kind::ExpDecay: {
        // log2 2^(-n) = -n, n = 2^P
        if (P > mpz_class(1) << 61) throw DepthUnreachable("n_h = 2^P with P = " + P.get_str() + " is out of range");
        return CertReal::from_int(-1, prec).mul_2exp(P.get_si());
    }
    case Kind::Power: return CertReal::from_rational(mpq_class(-param * P), prec);
    case Kind::Table:
        if (h >= table.size())
            throw DomainError("Phi table has no value for level " + std::to_string(h));
        return cr_log2(CertReal::from_rational(table[h], prec));
    }
    throw Error("bad Phi schedule");
}

// ---- solution counting

CountResult count_solutions(const std::string& theta_text, unsigned k, const RhoSchedule& rho, long M,
                            const MetricConfig& cfg) {
    mpq_class theta = parse_rational(theta_text);
    if (theta <= 0) throw DomainError("theta must be positive");
    if (k < 1) throw DomainError("k must be >= 1");
    if (M < 1) throw DomainError("M must be >= 1");

    mpz_class total = 0;
    for (long m = 1; m <= M; ++m) total += tuples_with_max(k, m);
    if (total > mpz_class(std::to_string(cfg.enum_cap)))
        throw CapExceeded(total.get_str() + " tuples exceed the enumeration cap");

    long double th = to_ld(theta);
    std::vector<long double> pw(M + 1);
    for (long a = 1; a <= M; ++a) pw[a] = std::pow(static_cast<long double>(a), th);

    CountResult out;
    out.tuples = total.get_ui();
    std::mutex mu;
    run_parallel(cfg.threads, [&](unsigned w, unsigned nw) {
        std::vector<SolutionRecord> recs, und;
        for (long m = 1 + w; m <= M; m += nw) {
            long double thr = rho.approx(m) / std::pow(static_cast<long double>(m), static_cast<long double>(k));
            for_each_tuple(k, m, [&](const std::vector<long>& t) {
                long double f = 0;
                for (long a : t) f += pw[a];
                long double r = std::fabs(f - std::nearbyint(f));
                if (r > thr + margin_for(f)) return;
                bool open = false;
                auto rec = certify(t, theta, rho, cfg.precision, open);
                if (!rec) return;
                (open ? und : recs).push_back(std::move(*rec));
            });
        }
        std::lock_guard<std::mutex> lock(mu);
        for (auto& r : recs) out.records.push_back(std::move(r));
        for (auto& r : und) out.undecided.push_back(std::move(r));
    });
    std::sort(out.records.begin(), out.records.end(), record_less);
    std::sort(out.undecided.begin(), out.undecided.end(), record_less);
    return out;
}

MeasureEstimate sample_Vm_measure(unsigned k, const RhoSchedule& rho, long m, const std::string& lo_text,
                                  const std::string& hi_text, std::uint64_t grid, const MetricConfig& cfg) {
    mpq_class lo = parse_rational(lo_text), hi = parse_rational(hi_text);
    if (!(lo > 0 && lo < hi)) throw DomainError("need 0 < lo < hi");
    if (grid < 1000) throw DomainError("grid must be >= 1000");
    if (k < 1 || m < 1) throw DomainError("need k >= 1 and m >= 1");
    mpz_class per = tuples_with_max(k, m);
    if (per > mpz_class(std::to_string(cfg.enum_cap))) throw CapExceeded("P(m) exceeds the enumeration cap");

    std::vector<std::vector<long>> tuples;
    for_each_tuple(k, m, [&](const std::vector<long>& t) { tuples.push_back(t); });

    long double thr = rho.approx(m) / std::pow(static_cast<long double>(m), static_cast<long double>(k));
    long double lo_ld = to_ld(lo), width_ld = to_ld(hi - lo);
    mpq_class width = hi - lo;

    MeasureEstimate est;
    est.grid = grid;
    std::mutex mu;
    run_parallel(cfg.threads, [&](unsigned w, unsigned nw) {
        std::uint64_t hits = 0, open = 0;
        std::uint64_t block = (grid + nw - 1) / nw;
        std::uint64_t b0 = w * block, b1 = std::min<std::uint64_t>(grid, b0 + block);
        std::vector<long double> pw(m + 1);
        for (std::uint64_t i = b0; i < b1; ++i) {
            long double th = lo_ld + (static_cast<long double>(i) + 0.5L) * width_ld / static_cast<long double>(grid);
            for (long a = k == 1 ? m : 1; a <= m; ++a) pw[a] = std::pow(static_cast<long double>(a), th);
            bool hit = false, ambiguous = false;
            std::optional<mpq_class> theta;
            for (const auto& t : tuples) {
                long double f = 0;
                for (long a : t) f += pw[a];
                long double r = std::fabs(f - std::nearbyint(f));
                long double mg = margin_for(f);
                if (r > thr + mg) continue;
                if (r < thr - mg) {
                    hit = true;
                    break;
                }
                if (!theta) {
                    mpq_class q(mpz_class(2 * i + 1), mpz_class(2) * mpz_class(std::to_string(grid)));
                    theta = lo + q * width;
                    theta->canonicalize();
                }
                bool und = false;
                auto rec = certify(t, *theta, rho, cfg.precision, und);
                if (rec && !und) {
                    hit = true;
                    break;
                }
                if (und) ambiguous = true;
            }
            if (hit)
                ++hits;
            else if (ambiguous)
                ++open;
        }
        std::lock_guard<std::mutex> lock(mu);
        est.hits += hits;
        est.undecided += open;
    });
    prec_t prec = cfg.precision.start;
    mpq_class frac(mpz_class(std::to_string(est.hits)), mpz_class(std::to_string(grid)));
    frac.canonicalize();
    est.estimate = CertReal::from_rational(frac * width, prec);
    est.envelope = rho.eval(m, prec) / CertReal::from_int(m, prec);
    return est;
}

// ---- exceptional theta

CertReal SeqTerm::value(prec_t prec) const {
    if (!compact) return CertReal::from_mpz(exact, prec);
    return CertReal::from_mpz(mant, prec).mul_2exp(exp2);
}

std::string SeqTerm::str() const {
    if (!compact) return exact.get_str();
    return mant.get_str() + "*2^" + std::to_string(exp2);
}

SeqTerm SeqTerm::parse(const std::string& text) {
    SeqTerm t;
    auto star = text.find("*2^");
    try {
        if (star == std::string::npos) {
            t.exact = mpz_class(text);
        } else {
            t.compact = true;
            t.mant = mpz_class(text.substr(0, star));
            t.exp2 = std::stol(text.substr(star + 3));
        }
    } catch (const std::exception&) {
        throw ParseError("bad sequence term '" + text + "'");
    }
    if ((!t.compact && t.exact < 2) || (t.compact && t.mant < 1)) throw ParseError("bad sequence term '" + text + "'");
    return t;
}

namespace {

void require_exact_upto(const ThetaSeq& t, unsigned h) {
    if (h >= t.seq.size()) throw DomainError("insufficient depth: no term s_" + std::to_string(h));
    for (unsigned i = 0; i <= h; ++i)
        if (t.seq[i].compact)
            throw DepthUnreachable("s_" + std::to_string(i) + " is stored compactly; U(s," + std::to_string(h) +
                                   ") is out of reach");
}

mpz_class prod_upto(const ThetaSeq& t, unsigned h) {
    require_exact_upto(t, h);
    mpz_class P = 1;
    for (unsigned i = 0; i <= h; ++i) P *= t.seq[i].exact;
    return P;
}

} // namespace

mpz_class U_of(const ThetaSeq& t, unsigned h) {
    require_exact_upto(t, h);
    mpz_class U = t.r;
    for (unsigned i = 1; i <= h; ++i) U = U * t.seq[i].exact + 1;
    return U;
}

Verdict witness_condition(const mpz_class& U, const CertReal& s, const CertReal& log2_phi, prec_t prec) {
    long u = to_long_checked(U, "U(s,h)");
    CertReal one = CertReal::from_int(1, prec);
    CertReal lhs = cr_exp2m1(one / (s - one)).mul_2exp(u);
    return compare_le(lhs, cr_exp2(log2_phi));
}

CertReal theta_enclosure(const ThetaSeq& t, prec_t prec) {
    CertReal one = CertReal::from_int(1, prec);
    CertReal sum = CertReal::from_rational(mpq_class(t.r, t.s), prec);
    CertReal prod = t.seq[0].value(prec);
    for (std::size_t d = 1; d < t.seq.size(); ++d) {
        prod = prod * t.seq[d].value(prec);
        sum = sum + one / prod;
    }
    CertReal tail = one / (prod * (t.seq.back().value(prec) - one));
    CertReal top = sum + tail;
    return CertReal::enclose(sum.lower(), top.upper(), prec);
}

ThetaSeq construct_theta(const PhiSchedule& phi, long r, long s, unsigned depth, const ThetaConfig& cfg) {
    if (r < 1 || s < 2) throw DomainError("need r >= 1 and s >= 2");
    if (depth < 1) throw DomainError("depth must be >= 1");
    ThetaSeq t;
    t.r = r;
    t.s = s;
    t.phi = phi;
    t.seq.push_back(SeqTerm::of(s));

    for (unsigned h = 0; h < depth; ++h) {
        ThetaStep step;
        step.h = h;
        step.P = prod_upto(t, h);
        step.U = U_of(t, h);
        const mpz_class& floor_s = t.seq[h].exact;
        Mpfr cap_f(64);
        mpfr_set_z(cap_f.get(), cfg.seq_cap.get_mpz_t(), MPFR_RNDN);

        SeqTerm next = refine(
            cfg.precision,
            [&](prec_t prec) -> std::optional<SeqTerm> {
                CertReal L = phi.log2_at(step.P, h, prec);
                step.log2_phi = L;
                long u = to_long_checked(step.U, "U(s,h)");
                // s - 1 >= T := 1 / log2(1 + Phi 2^-U)
                CertReal z = cr_exp2(L - CertReal::from_int(u, prec));
                CertReal T = cr_ln2(prec) / cr_log1p(z);
                if (mpfr_greater_p(T.upper().get(), cap_f.get())) {
                    // rounded-up compact term
                    Mpfr up(prec + 64);
                    mpfr_add_ui(up.get(), T.upper().get(), 1, MPFR_RNDU);
                    long e = std::max<long>(0, mpfr_get_exp(up.get()) - 128);
                    mpfr_div_2si(up.get(), up.get(), e, MPFR_RNDU);
                    SeqTerm c;
                    c.compact = true;
                    c.exp2 = e;
                    mpfr_get_z(c.mant.get_mpz_t(), up.get(), MPFR_RNDU);
                    if (e == 0) {
                        c.compact = false;
                        c.exact = std::max(c.mant, floor_s);
                    }
                    if (witness_condition(step.U, c.value(prec), L, prec) != Verdict::LE) return std::nullopt;
                    step.minimal_certified = false;
                    step.note = "minimal term exceeds the sequence cap; stored rounded up";
                    return c;
                }
                mpz_class cand;
                mpfr_get_z(cand.get_mpz_t(), T.lower().get(), MPFR_RNDD);
                cand += 1;
                if (cand < floor_s) cand = floor_s;
                if (cand > floor_s) {
                    Verdict below = witness_condition(step.U, CertReal::from_mpz(cand - 1, prec), L, prec);
                    if (below != Verdict::GT) return std::nullopt;
                }
                for (int tries = 0; tries < 4; ++tries, cand += 1) {
                    Verdict v = witness_condition(step.U, CertReal::from_mpz(cand, prec), L, prec);
                    if (v == Verdict::LE) {
                        step.minimal_certified = true;
                        step.note = cand == floor_s ? "floor s_h binds" : "";
                        return SeqTerm::of(cand);
                    }
                    if (v == Verdict::UNDECIDED) return std::nullopt;
                }
                return std::nullopt;
            },
            "sequence term");
        t.seq.push_back(std::move(next));
        t.steps.push_back(std::move(step));
    }
    t.theta = theta_enclosure(t, cfg.precision.start);
    return t;
}

WitnessCheck verify_witness(const ThetaSeq& t, unsigned h, const Precision& p) {
    if (h + 1 >= t.seq.size())
        throw DomainError("insufficient depth: witness h=" + std::to_string(h) + " needs s_" + std::to_string(h + 1));
    WitnessCheck w;
    w.h = h;
    w.U = U_of(t, h);
    w.P = prod_upto(t, h);
    long u = to_long_checked(w.U, "U(s,h)");
    const SeqTerm& nxt = t.seq[h + 1];
    return refine(
        p,
        [&](prec_t prec) -> std::optional<WitnessCheck> {
            CertReal one = CertReal::from_int(1, prec);
            CertReal sn = nxt.value(prec);
            // tail in [1/s_{h+1}, 1/(s_{h+1} - 1)]
            CertReal lo = cr_exp2m1(one / sn).mul_2exp(u);
            CertReal hi = cr_exp2m1(one / (sn - one)).mul_2exp(u);
            w.dist = CertReal::enclose(lo.lower(), hi.upper(), prec);
            w.phi = cr_exp2(t.phi.log2_at(w.P, h, prec));
            w.positive = lo.certifies_positive();
            w.verdict = compare_le(hi, w.phi);
            w.precision = prec;
            if (!w.positive || w.verdict == Verdict::UNDECIDED) return std::nullopt;
            w.pass = w.verdict == Verdict::LE;
            return w;
        },
        "witness");
}

} // namespace thetapow

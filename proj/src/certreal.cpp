#include "thetapow/certreal.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <memory>

namespace thetapow {

void ensure_exponent_range() {
    thread_local bool done = false;
    if (done) return;
    mpfr_set_emin(mpfr_get_emin_min());
    mpfr_set_emax(mpfr_get_emax_max());
    done = true;
}

Mpfr::Mpfr(prec_t prec) {
    ensure_exponent_range();
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
}

Mpfr::Mpfr(const Mpfr& o) {
    ensure_exponent_range();
    mpfr_init2(v_, o.prec());
    mpfr_set(v_, o.v_, MPFR_RNDN);
}

Mpfr::Mpfr(Mpfr&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
}

Mpfr& Mpfr::operator=(const Mpfr& o) {
    if (this != &o) {
        mpfr_set_prec(v_, o.prec());
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
}

Mpfr& Mpfr::operator=(Mpfr&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
}

Mpfr::~Mpfr() { mpfr_clear(v_); }

std::string Mpfr::str(int digits, mpfr_rnd_t rnd) const {
    if (mpfr_nan_p(v_)) return "nan";
    if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
    if (mpfr_zero_p(v_)) return "0";
    mpfr_exp_t e = 0;
    char* raw = mpfr_get_str(nullptr, &e, 10, static_cast<size_t>(digits), v_, rnd);
    std::string m(raw);
    mpfr_free_str(raw);
    std::string sign;
    if (m[0] == '-') {
        sign = "-";
        m.erase(0, 1);
    }
    while (m.size() > 1 && m.back() == '0') m.pop_back();
    // value = 0.m * 10^e
    long exp10 = static_cast<long>(e);
    if (exp10 >= -5 && exp10 <= 25) {
        std::string out;
        if (exp10 <= 0) {
            out = "0." + std::string(static_cast<size_t>(-exp10), '0') + m;
        } else if (static_cast<size_t>(exp10) >= m.size()) {
            out = m + std::string(static_cast<size_t>(exp10) - m.size(), '0');
        } else {
            out = m.substr(0, static_cast<size_t>(exp10)) + "." + m.substr(static_cast<size_t>(exp10));
        }
        return sign + out;
    }
    std::string out = m.substr(0, 1);
    if (m.size() > 1) out += "." + m.substr(1);
    return sign + out + "e" + std::to_string(exp10 - 1);
}

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::LE: return "LE";
    case Verdict::GT: return "GT";
    default: return "UNDECIDED";
    }
}

namespace {

// 2^(EXP(m) - prec(m)), an upper bound for the rounding error of m.
Mpfr ulp_of(const Mpfr& m) {
    Mpfr u(CertReal::kRadPrec);
    if (mpfr_zero_p(m.get())) return u;
    mpfr_set_ui_2exp(u.get(), 1, mpfr_get_exp(m.get()) - m.prec(), MPFR_RNDU);
    return u;
}

Mpfr abs_up(const Mpfr& m) {
    Mpfr r(CertReal::kRadPrec);
    mpfr_abs(r.get(), m.get(), MPFR_RNDU);
    return r;
}

void add_up(Mpfr& acc, const Mpfr& v) { mpfr_add(acc.get(), acc.get(), v.get(), MPFR_RNDU); }

using Unary = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t);

CertReal increasing(const CertReal& x, Unary fn) {
    Mpfr lo(x.prec()), hi(x.prec());
    fn(lo.get(), x.lower().get(), MPFR_RNDD);
    fn(hi.get(), x.upper().get(), MPFR_RNDU);
    if (mpfr_nan_p(lo.get()) || mpfr_nan_p(hi.get())) throw DomainError("elementary function outside its domain");
    if (mpfr_inf_p(lo.get()) || mpfr_inf_p(hi.get())) throw DomainError("elementary function overflow");
    return CertReal::enclose(lo, hi, x.prec());
}

} // namespace

CertReal::CertReal(prec_t prec) : mid_(prec), rad_(kRadPrec), prec_(prec) {}

CertReal CertReal::from_int(long v, prec_t prec) {
    CertReal r(std::max<prec_t>(prec, 64));
    mpfr_set_si(r.mid_.get(), v, MPFR_RNDN);
    return r;
}

CertReal CertReal::from_mpz(const mpz_class& v, prec_t prec) {
    prec_t need = static_cast<prec_t>(mpz_sizeinbase(v.get_mpz_t(), 2)) + 1;
    CertReal r(std::max(prec, need));
    mpfr_set_z(r.mid_.get(), v.get_mpz_t(), MPFR_RNDN);
    return r;
}

CertReal CertReal::from_rational(const mpq_class& q, prec_t prec) {
    CertReal r(prec);
    // Dyadic rationals whose numerator fits are represented exactly.
    const mpz_class& den = q.get_den();
    if (mpz_popcount(den.get_mpz_t()) == 1) {
        prec_t need = static_cast<prec_t>(mpz_sizeinbase(q.get_num_mpz_t(), 2)) + 1;
        if (need > prec) r = CertReal(need);
    }
    int t = mpfr_set_q(r.mid_.get(), q.get_mpq_t(), MPFR_RNDN);
    if (t != 0) {
        mpfr_set_ui_2exp(r.rad_.get(), 1, mpfr_get_exp(r.mid_.get()) - r.prec_ - 1, MPFR_RNDU);
    }
    return r;
}

CertReal CertReal::from_mpfr(const Mpfr& v, prec_t prec) {
    CertReal r(std::max(prec, v.prec()));
    mpfr_set(r.mid_.get(), v.get(), MPFR_RNDN);
    return r;
}

CertReal CertReal::enclose(const Mpfr& lo, const Mpfr& hi, prec_t prec) {
    if (mpfr_cmp(lo.get(), hi.get()) > 0) throw DomainError("enclose: lo > hi");
    CertReal r(prec);
    if (mpfr_equal_p(lo.get(), hi.get()) && lo.prec() <= prec) {
        mpfr_set(r.mid_.get(), lo.get(), MPFR_RNDN);
        return r;
    }
    Mpfr sum(std::max(lo.prec(), hi.prec()) + 1);
    mpfr_add(sum.get(), lo.get(), hi.get(), MPFR_RNDN);
    mpfr_div_2ui(r.mid_.get(), sum.get(), 1, MPFR_RNDN);
    Mpfr a(kRadPrec), b(kRadPrec);
    mpfr_sub(a.get(), hi.get(), r.mid_.get(), MPFR_RNDU);
    mpfr_sub(b.get(), r.mid_.get(), lo.get(), MPFR_RNDU);
    mpfr_max(r.rad_.get(), a.get(), b.get(), MPFR_RNDU);
    if (mpfr_sgn(r.rad_.get()) < 0) mpfr_set_zero(r.rad_.get(), 1);
    return r;
}

Mpfr CertReal::lower() const {
    Mpfr out(prec_);
    mpfr_sub(out.get(), mid_.get(), rad_.get(), MPFR_RNDD);
    return out;
}

Mpfr CertReal::upper() const {
    Mpfr out(prec_);
    mpfr_add(out.get(), mid_.get(), rad_.get(), MPFR_RNDU);
    return out;
}

bool CertReal::certifies_positive() const { return mpfr_sgn(lower().get()) > 0; }
bool CertReal::certifies_negative() const { return mpfr_sgn(upper().get()) < 0; }

bool CertReal::contains(const Mpfr& v) const {
    return mpfr_lessequal_p(lower().get(), v.get()) && mpfr_lessequal_p(v.get(), upper().get());
}

bool CertReal::contains(const CertReal& o) const {
    return mpfr_lessequal_p(lower().get(), o.lower().get()) && mpfr_lessequal_p(o.upper().get(), upper().get());
}

bool CertReal::overlaps(const CertReal& o) const {
    return mpfr_lessequal_p(lower().get(), o.upper().get()) && mpfr_lessequal_p(o.lower().get(), upper().get());
}

std::string CertReal::lower_str(int digits) const { return lower().str(digits, MPFR_RNDD); }
std::string CertReal::upper_str(int digits) const { return upper().str(digits, MPFR_RNDU); }
std::string CertReal::mid_str(int digits) const { return mid_.str(digits, MPFR_RNDN); }

CertReal CertReal::operator-() const {
    CertReal r(*this);
    mpfr_neg(r.mid_.get(), mid_.get(), MPFR_RNDN);
    return r;
}

CertReal operator+(const CertReal& a, const CertReal& b) {
    CertReal r(std::max(a.prec_, b.prec_));
    int t = mpfr_add(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    mpfr_add(r.rad_.get(), a.rad_.get(), b.rad_.get(), MPFR_RNDU);
    if (t != 0) add_up(r.rad_, ulp_of(r.mid_));
    return r;
}

CertReal operator-(const CertReal& a, const CertReal& b) {
    CertReal r(std::max(a.prec_, b.prec_));
    int t = mpfr_sub(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    mpfr_add(r.rad_.get(), a.rad_.get(), b.rad_.get(), MPFR_RNDU);
    if (t != 0) add_up(r.rad_, ulp_of(r.mid_));
    return r;
}

CertReal operator*(const CertReal& a, const CertReal& b) {
    CertReal r(std::max(a.prec_, b.prec_));
    int t = mpfr_mul(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    Mpfr am = abs_up(a.mid_), bm = abs_up(b.mid_), tmp(CertReal::kRadPrec);
    mpfr_mul(r.rad_.get(), am.get(), b.rad_.get(), MPFR_RNDU);
    mpfr_mul(tmp.get(), bm.get(), a.rad_.get(), MPFR_RNDU);
    add_up(r.rad_, tmp);
    mpfr_mul(tmp.get(), a.rad_.get(), b.rad_.get(), MPFR_RNDU);
    add_up(r.rad_, tmp);
    if (t != 0) add_up(r.rad_, ulp_of(r.mid_));
    return r;
}

CertReal operator/(const CertReal& a, const CertReal& b) {
    if (!b.certifies_nonzero()) throw DomainError("division by an interval containing 0");
    CertReal r(std::max(a.prec_, b.prec_));
    int t = mpfr_div(r.mid_.get(), a.mid_.get(), b.mid_.get(), MPFR_RNDN);
    if (b.is_exact()) {
        // a/b exact divisor: radius scales by 1/|b|.
        Mpfr bm(CertReal::kRadPrec);
        mpfr_abs(bm.get(), b.mid_.get(), MPFR_RNDD);
        mpfr_div(r.rad_.get(), a.rad_.get(), bm.get(), MPFR_RNDU);
    } else {
        // |a/b - am/bm| <= (ar + |am/bm| br) / (|bm| - br)
        Mpfr q = abs_up(r.mid_);
        add_up(q, ulp_of(r.mid_));
        Mpfr num(CertReal::kRadPrec), den(CertReal::kRadPrec);
        mpfr_mul(num.get(), q.get(), b.rad_.get(), MPFR_RNDU);
        add_up(num, a.rad_);
        Mpfr bm(b.prec_);
        mpfr_abs(bm.get(), b.mid_.get(), MPFR_RNDN);
        mpfr_sub(den.get(), bm.get(), b.rad_.get(), MPFR_RNDD);
        mpfr_div(r.rad_.get(), num.get(), den.get(), MPFR_RNDU);
    }
    if (t != 0) add_up(r.rad_, ulp_of(r.mid_));
    return r;
}

CertReal CertReal::abs() const {
    if (mpfr_sgn(lower().get()) >= 0) return *this;
    if (mpfr_sgn(upper().get()) <= 0) return -*this;
    Mpfr lo(prec_), hi(prec_);
    Mpfr l = lower(), u = upper();
    mpfr_neg(l.get(), l.get(), MPFR_RNDU);
    mpfr_max(hi.get(), l.get(), u.get(), MPFR_RNDU);
    return enclose(lo, hi, prec_);
}

CertReal CertReal::mul_2exp(long e) const {
    CertReal r(*this);
    mpfr_mul_2si(r.mid_.get(), mid_.get(), e, MPFR_RNDN);
    mpfr_mul_2si(r.rad_.get(), rad_.get(), e, MPFR_RNDU);
    return r;
}

CertReal CertReal::inflate(const Mpfr& v) const {
    CertReal r(*this);
    Mpfr a = abs_up(v);
    add_up(r.rad_, a);
    return r;
}

mpq_class parse_rational(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ParseError("empty number");

    auto is_int = [](const std::string& t) {
        size_t i = (!t.empty() && (t[0] == '+' || t[0] == '-')) ? 1 : 0;
        if (i >= t.size()) return false;
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
        return true;
    };
    auto to_z = [](std::string t) {
        if (!t.empty() && t[0] == '+') t.erase(0, 1);
        return mpz_class(t, 10);
    };

    size_t slash = s.find('/');
    if (slash != std::string::npos) {
        std::string p = s.substr(0, slash), q = s.substr(slash + 1);
        if (!is_int(p) || !is_int(q)) throw ParseError("malformed rational '" + raw + "'");
        mpz_class den = to_z(q);
        if (den == 0) throw ParseError("zero denominator in '" + raw + "'");
        mpq_class r(to_z(p), den);
        r.canonicalize();
        return r;
    }

    size_t i = 0;
    bool neg = false;
    if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
    std::string digits;
    long scale = 0;
    bool any = false, dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits += c;
            any = true;
            if (dot) ++scale;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!any) throw ParseError("malformed decimal '" + raw + "'");
    long exp10 = 0;
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E') throw ParseError("malformed decimal '" + raw + "'");
        std::string e = s.substr(i + 1);
        if (!is_int(e) || e.size() > 7) throw ParseError("malformed exponent in '" + raw + "'");
        exp10 = std::stol(e);
    }
    exp10 -= scale;
    if (exp10 > 100000 || exp10 < -100000) throw ParseError("exponent out of range in '" + raw + "'");
    mpz_class num(digits, 10), pw;
    mpz_ui_pow_ui(pw.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
    mpq_class r = exp10 < 0 ? mpq_class(num, pw) : mpq_class(num * pw);
    r.canonicalize();
    if (neg) r = -r;
    return r;
}

CertReal cr_from_decimal(const std::string& text, prec_t prec) {
    if (prec < 32) throw DomainError("precision below 32 bits");
    return CertReal::from_rational(parse_rational(text), prec);
}

CertReal cr_root(const CertReal& x, unsigned long d) {
    if (d == 0) throw DomainError("root of order 0");
    if (!x.certifies_positive()) throw DomainError("root of a value not certified positive");
    if (d == 1) return x;
    Mpfr lo(x.prec()), hi(x.prec());
    mpfr_rootn_ui(lo.get(), x.lower().get(), d, MPFR_RNDD);
    mpfr_rootn_ui(hi.get(), x.upper().get(), d, MPFR_RNDU);
    return CertReal::enclose(lo, hi, x.prec());
}

CertReal cr_pow(const CertReal& x, const CertReal& theta) {
    if (!x.certifies_positive()) throw DomainError("power of a value not certified positive");
    prec_t prec = std::max(x.prec(), theta.prec());
    if (theta.is_exact() && mpfr_zero_p(theta.mid().get())) return CertReal::from_int(1, prec);
    Mpfr xs[2] = {x.lower(), x.upper()};
    Mpfr ts[2] = {theta.lower(), theta.upper()};
    Mpfr lo(prec), hi(prec), t(prec);
    bool first = true;
    for (auto& xv : xs)
        for (auto& tv : ts) {
            mpfr_pow(t.get(), xv.get(), tv.get(), MPFR_RNDD);
            if (first || mpfr_less_p(t.get(), lo.get())) mpfr_set(lo.get(), t.get(), MPFR_RNDD);
            mpfr_pow(t.get(), xv.get(), tv.get(), MPFR_RNDU);
            if (first || mpfr_greater_p(t.get(), hi.get())) mpfr_set(hi.get(), t.get(), MPFR_RNDU);
            first = false;
        }
    if (mpfr_inf_p(hi.get()) || mpfr_zero_p(lo.get())) throw DomainError("power overflow");
    return CertReal::enclose(lo, hi, prec);
}

CertReal cr_exp(const CertReal& x) { return increasing(x, mpfr_exp); }
CertReal cr_exp2(const CertReal& x) { return increasing(x, mpfr_exp2); }
CertReal cr_expm1(const CertReal& x) { return increasing(x, mpfr_expm1); }

CertReal cr_log(const CertReal& x) {
    if (!x.certifies_positive()) throw DomainError("log of a value not certified positive");
    return increasing(x, mpfr_log);
}

CertReal cr_log2(const CertReal& x) {
    if (!x.certifies_positive()) throw DomainError("log2 of a value not certified positive");
    return increasing(x, mpfr_log2);
}

CertReal cr_log1p(const CertReal& x) {
    if (!(x + CertReal::from_int(1, x.prec())).certifies_positive())
        throw DomainError("log1p of a value not certified > -1");
    return increasing(x, mpfr_log1p);
}

CertReal cr_ln2(prec_t prec) {
    Mpfr lo(prec), hi(prec);
    mpfr_const_log2(lo.get(), MPFR_RNDD);
    mpfr_const_log2(hi.get(), MPFR_RNDU);
    return CertReal::enclose(lo, hi, prec);
}

CertReal cr_pi(prec_t prec) {
    Mpfr lo(prec), hi(prec);
    mpfr_const_pi(lo.get(), MPFR_RNDD);
    mpfr_const_pi(hi.get(), MPFR_RNDU);
    return CertReal::enclose(lo, hi, prec);
}

CertReal cr_exp2m1(const CertReal& x) { return cr_expm1(x * cr_ln2(x.prec() + 16)); }

Verdict compare_le(const CertReal& x, const CertReal& bound) {
    if (mpfr_lessequal_p(x.upper().get(), bound.lower().get())) return Verdict::LE;
    if (mpfr_greater_p(x.lower().get(), bound.upper().get())) return Verdict::GT;
    return Verdict::UNDECIDED;
}

DistResult dist_nearest_int(const CertReal& x, const CertReal& bound) {
    prec_t prec = x.prec();
    DistResult res{CertReal(prec), Verdict::UNDECIDED, false, mpz_class(0)};
    mpfr_get_z(res.nearest.get_mpz_t(), x.mid().get(), MPFR_RNDN);

    Mpfr quarter(CertReal::kRadPrec);
    mpfr_set_ui_2exp(quarter.get(), 1, -2, MPFR_RNDN);
    Mpfr half(CertReal::kRadPrec);
    mpfr_set_ui_2exp(half.get(), 1, -1, MPFR_RNDN);
    Mpfr lo(prec), hi(prec);
    if (mpfr_greaterequal_p(x.rad().get(), quarter.get())) {
        mpfr_set(hi.get(), half.get(), MPFR_RNDU);
        res.dist = CertReal::enclose(lo, hi, prec);
        res.verdict = compare_le(res.dist, bound);
        return res;
    }
    // ||.|| is 1-Lipschitz: ||x|| lies within rad of ||mid||.
    Mpfr m(prec);
    mpfr_set_z(m.get(), res.nearest.get_mpz_t(), MPFR_RNDN);
    Mpfr dlo(prec), dhi(prec);
    mpfr_sub(dlo.get(), x.mid().get(), m.get(), MPFR_RNDD);
    mpfr_sub(dhi.get(), x.mid().get(), m.get(), MPFR_RNDU);
    if (mpfr_sgn(dhi.get()) < 0) {
        mpfr_neg(dlo.get(), dlo.get(), MPFR_RNDU);
        mpfr_neg(dhi.get(), dhi.get(), MPFR_RNDD);
        mpfr_swap(dlo.get(), dhi.get());
    } else if (mpfr_sgn(dlo.get()) < 0) {
        mpfr_set_zero(dlo.get(), 1);
    }
    mpfr_sub(lo.get(), dlo.get(), x.rad().get(), MPFR_RNDD);
    if (mpfr_sgn(lo.get()) < 0) mpfr_set_zero(lo.get(), 1);
    mpfr_add(hi.get(), dhi.get(), x.rad().get(), MPFR_RNDU);
    if (mpfr_greater_p(hi.get(), half.get())) mpfr_set(hi.get(), half.get(), MPFR_RNDU);
    if (mpfr_greater_p(lo.get(), hi.get())) mpfr_set(lo.get(), hi.get(), MPFR_RNDD);
    res.dist = CertReal::enclose(lo, hi, prec);
    res.verdict = compare_le(res.dist, bound);
    res.positive = mpfr_sgn(lo.get()) > 0;
    return res;
}

DistResult dist_nearest_int(const CertReal& x, const mpq_class& bound) {
    return dist_nearest_int(x, CertReal::from_rational(bound, x.prec()));
}

std::optional<mpz_class> certified_floor(const CertReal& x) {
    mpz_class a, b;
    mpfr_get_z(a.get_mpz_t(), x.lower().get(), MPFR_RNDD);
    mpfr_get_z(b.get_mpz_t(), x.upper().get(), MPFR_RNDD);
    if (a != b) return std::nullopt;
    return a;
}

std::optional<mpz_class> certified_ceil(const CertReal& x) {
    mpz_class a, b;
    mpfr_get_z(a.get_mpz_t(), x.lower().get(), MPFR_RNDU);
    mpfr_get_z(b.get_mpz_t(), x.upper().get(), MPFR_RNDU);
    if (a != b) return std::nullopt;
    return a;
}

Precision precision_from_env() {
    Precision p;
    if (const char* env = std::getenv("THETA_POWERS_PRECISION")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 32) throw ParseError("THETA_POWERS_PRECISION must be an integer >= 32");
        p.start = static_cast<prec_t>(v);
        if (p.start > p.cap) p.cap = p.start;
    }
    return p;
}

} // namespace thetapow

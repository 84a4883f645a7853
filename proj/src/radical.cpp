#include "thetapow/radical.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>

namespace thetapow {

using u128 = unsigned __int128;

namespace {

constexpr int kFixBits = 126;
constexpr u128 kFixMask = (u128{1} << kFixBits) - 1;

// floor(2^126 * {f^(1/d)}), error below one unit.
u128 frac_fixed(std::uint64_t f, unsigned d) {
    Mpfr v(256);
    mpfr_set_ui(v.get(), f, MPFR_RNDN);
    mpfr_rootn_ui(v.get(), v.get(), d, MPFR_RNDN);
    mpfr_frac(v.get(), v.get(), MPFR_RNDN);
    mpfr_mul_2ui(v.get(), v.get(), kFixBits, MPFR_RNDN);
    mpz_class z;
    mpfr_get_z(z.get_mpz_t(), v.get(), MPFR_RNDZ);
    mpz_class hi = z >> 64;
    mpz_class lo = z - (hi << 64);
    return (u128{mpz_get_ui(hi.get_mpz_t())} << 64) | mpz_get_ui(lo.get_mpz_t());
}

u128 mul_wrap(u128 v, long long c) {
    if (c >= 0) return (v * static_cast<u128>(c)) & kFixMask;
    return (kFixMask + 1 - ((v * static_cast<u128>(-c)) & kFixMask)) & kFixMask;
}

// (base)^count without overflow; 0 when above cap.
std::uint64_t bounded_power(std::uint64_t base, std::size_t count, std::uint64_t cap) {
    u128 total = 1;
    for (std::size_t i = 0; i < count; ++i) {
        total *= base;
        if (total > cap) return 0;
    }
    return static_cast<std::uint64_t>(total);
}

} // namespace

std::vector<unsigned long> first_primes(unsigned count) {
    std::vector<unsigned long> out;
    for (unsigned long c = 2; out.size() < count; ++c) {
        bool prime = true;
        for (unsigned long p : out) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) out.push_back(c);
    }
    return out;
}

std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n) {
    std::vector<std::pair<std::uint64_t, unsigned>> out;
    for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        unsigned e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        if (e) out.emplace_back(p, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

mpz_class integer_root(const mpz_class& x, unsigned long d) {
    if (x < 0) throw DomainError("integer_root of a negative number");
    mpz_class r;
    mpz_root(r.get_mpz_t(), x.get_mpz_t(), d);
    return r;
}

std::optional<mpq_class> exact_rational_power(const mpq_class& base, const mpq_class& e) {
    if (base < 0) throw DomainError("exact_rational_power of a negative base");
    if (e == 0) return mpq_class(1);
    if (base == 0) {
        if (e < 0) throw DomainError("zero to a negative power");
        return mpq_class(0);
    }
    if (base == 1) return mpq_class(1);
    if (e < 0) {
        auto r = exact_rational_power(base, -e);
        if (!r) return std::nullopt;
        return mpq_class(1) / *r;
    }
    const mpz_class& p = e.get_num();
    const mpz_class& q = e.get_den();
    auto root_exact = [&](const mpz_class& v) -> std::optional<mpz_class> {
        if (v == 1) return mpz_class(1);
        if (!q.fits_ulong_p() || q > mpz_sizeinbase(v.get_mpz_t(), 2)) return std::nullopt;
        mpz_class r;
        if (!mpz_root(r.get_mpz_t(), v.get_mpz_t(), q.get_ui())) return std::nullopt;
        return r;
    };
    auto rn = root_exact(base.get_num());
    if (!rn) return std::nullopt;
    auto rd = root_exact(base.get_den());
    if (!rd) return std::nullopt;
    // Refuse results above ~4M bits.
    double bits = p.get_d() * static_cast<double>(std::max(mpz_sizeinbase(rn->get_mpz_t(), 2),
                                                             mpz_sizeinbase(rd->get_mpz_t(), 2)));
    if (!p.fits_ulong_p() || bits > 4.0e6) return std::nullopt;
    mpz_class a, b;
    mpz_pow_ui(a.get_mpz_t(), rn->get_mpz_t(), p.get_ui());
    mpz_pow_ui(b.get_mpz_t(), rd->get_mpz_t(), p.get_ui());
    mpq_class r(a, b);
    r.canonicalize();
    return r;
}

void RadicalForm::add_power(std::uint64_t base, std::uint64_t p, const mpq_class& coeff) {
    if (coeff == 0) return;
    if (p == 0) {
        rational_ += coeff;
        return;
    }
    if (base == 0) return;
    Radicand key;
    mpz_class c = 1;
    for (auto [prime, e] : factorize(base)) {
        u128 ep = static_cast<u128>(e) * p;
        u128 whole = ep / q_;
        std::uint64_t rem = static_cast<std::uint64_t>(ep % q_);
        if (whole > 0) {
            if (whole > 1u << 22) throw CapExceeded("radical coefficient too large");
            mpz_class t;
            mpz_ui_pow_ui(t.get_mpz_t(), prime, static_cast<unsigned long>(whole));
            c *= t;
        }
        if (rem) key.emplace_back(prime, rem);
    }
    mpq_class term = coeff * mpq_class(c);
    if (key.empty()) {
        rational_ += term;
        return;
    }
    auto& slot = terms_[key];
    slot += term;
    if (slot == 0) terms_.erase(key);
}

void RadicalForm::negate() {
    rational_ = -rational_;
    for (auto& [k, v] : terms_) v = -v;
}

void RadicalForm::add(const RadicalForm& o, const mpq_class& scale) {
    rational_ += scale * o.rational_;
    if (o.terms_.empty()) return;
    if (!terms_.empty() && q_ != o.q_) throw DomainError("radical forms of different orders");
    q_ = o.q_;
    for (const auto& [k, v] : o.terms_) {
        auto& slot = terms_[k];
        slot += scale * v;
        if (slot == 0) terms_.erase(k);
    }
}

bool RadicalForm::operator==(const RadicalForm& o) const {
    if (rational_ != o.rational_) return false;
    if (terms_.empty() && o.terms_.empty()) return true;
    return q_ == o.q_ && terms_ == o.terms_;
}

std::uint64_t RadicalBasis::product() const {
    std::uint64_t out = 1;
    for (unsigned long p : primes)
        for (unsigned i = 0; i + 1 < d; ++i) out *= p;
    return out;
}

RadicalBasis build_basis(unsigned d, unsigned xi, unsigned basis_cap) {
    if (d < 2) throw DomainError("basis needs d >= 2");
    if (xi < 1) throw DomainError("basis needs xi >= 1");
    if (bounded_power(d, xi, basis_cap) == 0)
        throw CapExceeded("d^xi = " + std::to_string(d) + "^" + std::to_string(xi) + " exceeds basis cap " +
                          std::to_string(basis_cap));
    RadicalBasis b;
    b.d = d;
    b.xi = xi;
    b.primes = first_primes(xi);
    std::vector<std::uint64_t> all{1};
    for (unsigned long p : b.primes) {
        std::vector<std::uint64_t> next;
        for (std::uint64_t v : all) {
            std::uint64_t t = v;
            for (unsigned a = 0; a < d; ++a) {
                next.push_back(t);
                t *= p;
            }
        }
        all.swap(next);
    }
    std::sort(all.begin(), all.end());
    b.elements.assign(all.begin() + 1, all.end());
    return b;
}

RadicalSum RadicalSum::zero(const RadicalBasis& b) {
    RadicalSum w;
    w.d = b.d;
    w.elements = b.elements;
    w.coeffs.assign(b.size(), 0);
    return w;
}

long long RadicalSum::height() const {
    long long m = 0;
    for (long long c : coeffs) m = std::max(m, c < 0 ? -c : c);
    return m;
}

bool RadicalSum::is_zero_vector() const {
    return std::all_of(coeffs.begin(), coeffs.end(), [](long long c) { return c == 0; });
}

RadicalSum RadicalSum::operator+(const RadicalSum& o) const {
    if (d != o.d || elements != o.elements) throw DomainError("radical sums over different bases");
    RadicalSum r = *this;
    for (std::size_t i = 0; i < coeffs.size(); ++i) r.coeffs[i] += o.coeffs[i];
    r.offset += o.offset;
    return r;
}

RadicalSum RadicalSum::operator-() const { return scaled(-1); }

RadicalSum RadicalSum::scaled(long long k) const {
    RadicalSum r = *this;
    for (auto& c : r.coeffs) c *= k;
    r.offset *= static_cast<long>(k);
    return r;
}

std::string RadicalSum::describe() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (coeffs[i] == 0) continue;
        if (!first) os << (coeffs[i] < 0 ? " - " : " + ");
        else if (coeffs[i] < 0) os << "-";
        long long a = coeffs[i] < 0 ? -coeffs[i] : coeffs[i];
        os << a << "*" << elements[i] << "^(1/" << d << ")";
        first = false;
    }
    if (first) os << "0";
    if (offset != 0) os << (offset < 0 ? " + " : " - ") << mpz_class(abs(offset)).get_str();
    return os.str();
}

const CertReal& root_of(std::uint64_t f, unsigned d, prec_t prec) {
    thread_local std::map<std::tuple<std::uint64_t, unsigned, prec_t>, CertReal> cache;
    auto key = std::make_tuple(f, d, prec);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    if (cache.size() > 4096) cache.clear();
    CertReal x = CertReal::from_mpz(mpz_class(static_cast<unsigned long>(f)), prec);
    return cache.emplace(key, cr_root(x, d)).first->second;
}

CertReal eval_radical_sum(const RadicalSum& w, prec_t prec) {
    CertReal acc = CertReal::from_mpz(-w.offset, prec);
    for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
        if (w.coeffs[i] == 0) continue;
        acc = acc + CertReal::from_int(static_cast<long>(w.coeffs[i]), prec) * root_of(w.elements[i], w.d, prec);
    }
    return acc;
}

RadicalForm radical_form(const RadicalSum& w) {
    RadicalForm f(w.d);
    for (std::size_t i = 0; i < w.coeffs.size(); ++i)
        f.add_power(w.elements[i], 1, mpq_class(static_cast<long>(w.coeffs[i])));
    f.add_rational(mpq_class(-w.offset));
    return f;
}

mpq_class pigeonhole_bound(const RadicalBasis& b, long n) {
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), static_cast<unsigned long>(n), b.size());
    return mpq_class(mpz_class(1), den);
}

SmallFrac find_small_fracpart(const RadicalBasis& b, long n, const SearchConfig& cfg) {
    if (n < 1) throw DomainError("find_small_fracpart needs n >= 1");
    const std::size_t D = b.size();
    const std::uint64_t base = static_cast<std::uint64_t>(n) + 1;
    const std::uint64_t total = bounded_power(base, D, cfg.enum_cap);
    if (total == 0)
        throw CapExceeded("pigeonhole search of (" + std::to_string(n) + "+1)^" + std::to_string(D) +
                          " points exceeds cap " + std::to_string(cfg.enum_cap));

    std::vector<u128> fr(D);
    for (std::size_t i = 0; i < D; ++i) fr[i] = frac_fixed(b.elements[i], b.d);

    auto digits_of = [&](std::uint64_t idx) {
        std::vector<long long> c(D);
        for (std::size_t i = 0; i < D; ++i) {
            c[i] = static_cast<long long>(idx % base);
            idx /= base;
        }
        return c;
    };
    auto value_of = [&](std::uint64_t idx) {
        u128 v = 0;
        for (std::size_t i = 0; i < D; ++i) {
            v = (v + fr[i] * (idx % base)) & kFixMask;
            idx /= base;
        }
        return v;
    };

    std::vector<std::pair<std::uint64_t, std::uint64_t>> keys;
    keys.reserve(total);
    {
        std::vector<std::uint64_t> digit(D, 0);
        u128 v = 0;
        for (std::uint64_t idx = 0; idx < total; ++idx) {
            keys.emplace_back(static_cast<std::uint64_t>(v >> (kFixBits - 64)), idx);
            for (std::size_t i = 0; i < D; ++i) {
                if (++digit[i] < base) {
                    v = (v + fr[i]) & kFixMask;
                    break;
                }
                digit[i] = 0;
                v = (v + (kFixMask + 1) - ((fr[i] * (base - 1)) & kFixMask)) & kFixMask;
            }
        }
    }
    std::sort(keys.begin(), keys.end());

    u128 best = kFixMask;
    std::uint64_t hi_idx = 0, lo_idx = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        std::uint64_t a = keys[i].second, c = keys[(i + 1) % keys.size()].second;
        if (a == c) continue;
        u128 va = value_of(a), vc = value_of(c);
        u128 up = (vc - va) & kFixMask, down = (va - vc) & kFixMask;
        if (up != 0 && up < best) {
            best = up;
            hi_idx = c;
            lo_idx = a;
        }
        if (down != 0 && down < best) {
            best = down;
            hi_idx = a;
            lo_idx = c;
        }
    }
    if (hi_idx == lo_idx) throw Error("pigeonhole search found no distinct pair");

    SmallFrac out{RadicalSum::zero(b), CertReal()};
    auto ch = digits_of(hi_idx), cl = digits_of(lo_idx);
    for (std::size_t i = 0; i < D; ++i) out.w.coeffs[i] = ch[i] - cl[i];

    const mpq_class bound = pigeonhole_bound(b, n);
    Precision p = cfg.precision;
    prec_t need = 64 + static_cast<prec_t>(D + 1) * static_cast<prec_t>(mpz_sizeinbase(mpz_class(n).get_mpz_t(), 2));
    p.start = std::min(std::max(p.start, need), p.cap);
    RadicalSum w = out.w;
    auto frac = refine(
        p,
        [&](prec_t prec) -> std::optional<std::pair<mpz_class, CertReal>> {
            w.offset = 0;
            CertReal s = eval_radical_sum(w, prec);
            auto fl = certified_floor(s);
            if (!fl) return std::nullopt;
            CertReal f = s - CertReal::from_mpz(*fl, prec);
            if (!f.certifies_positive()) return std::nullopt;
            Verdict v = compare_le(f, CertReal::from_rational(bound, prec));
            if (v == Verdict::GT) throw Error("pigeonhole pair violates its bound: " + w.describe());
            if (v == Verdict::UNDECIDED) return std::nullopt;
            return std::make_pair(*fl, f);
        },
        "pigeonhole certification");
    out.w.offset = frac.first;
    out.frac = frac.second;
    return out;
}

OracleDist min_nonzero_dist_oracle(const RadicalBasis& b, long n, const SearchConfig& cfg) {
    if (n < 1) throw DomainError("oracle needs n >= 1");
    const std::size_t D = b.size();
    const std::uint64_t side = 2 * static_cast<std::uint64_t>(n) + 1;
    const std::uint64_t total = bounded_power(side, D, cfg.enum_cap);
    if (total == 0) throw CapExceeded("oracle enumeration exceeds cap " + std::to_string(cfg.enum_cap));

    std::vector<u128> fr(D);
    for (std::size_t i = 0; i < D; ++i) fr[i] = frac_fixed(b.elements[i], b.d);
    const u128 slack = 2 * static_cast<u128>(D) * static_cast<u128>(n) + 4;

    std::vector<long long> c(D, -n);
    u128 best = kFixMask;
    std::vector<std::vector<long long>> cands;
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        if (idx) {
            for (std::size_t i = 0; i < D; ++i) {
                if (++c[i] <= n) break;
                c[i] = -n;
            }
        }
        // canonical sign: first nonzero coordinate positive
        std::size_t first = D;
        for (std::size_t i = 0; i < D; ++i)
            if (c[i] != 0) {
                first = i;
                break;
            }
        if (first == D || c[first] < 0) continue;
        u128 v = 0;
        for (std::size_t i = 0; i < D; ++i) v = (v + mul_wrap(fr[i], c[i])) & kFixMask;
        u128 dist = std::min(v, (kFixMask + 1 - v) & kFixMask);
        if (dist > best + slack) continue;
        if (dist < best) best = dist;
        cands.push_back(c);
        if (cands.size() > 4096) {
            std::vector<std::vector<long long>> keep;
            for (auto& cc : cands) {
                u128 vv = 0;
                for (std::size_t i = 0; i < D; ++i) vv = (vv + mul_wrap(fr[i], cc[i])) & kFixMask;
                if (std::min(vv, (kFixMask + 1 - vv) & kFixMask) <= best + slack) keep.push_back(cc);
            }
            cands.swap(keep);
        }
    }

    std::vector<RadicalSum> live;
    for (auto& cc : cands) {
        u128 vv = 0;
        for (std::size_t i = 0; i < D; ++i) vv = (vv + mul_wrap(fr[i], cc[i])) & kFixMask;
        if (std::min(vv, (kFixMask + 1 - vv) & kFixMask) > best + slack) continue;
        RadicalSum w = RadicalSum::zero(b);
        w.coeffs = cc;
        live.push_back(w);
    }

    Precision p = cfg.precision;
    prec_t need = 64 + static_cast<prec_t>(D + 1) * static_cast<prec_t>(mpz_sizeinbase(mpz_class(n).get_mpz_t(), 2));
    p.start = std::min(std::max(p.start, need), p.cap);
    return refine(
        p,
        [&](prec_t prec) -> std::optional<OracleDist> {
            std::vector<DistResult> ds;
            for (auto& w : live) {
                w.offset = 0;
                ds.push_back(dist_nearest_int(eval_radical_sum(w, prec), mpq_class(1, 2)));
                if (!ds.back().positive) return std::nullopt;
            }
            std::size_t arg = 0;
            for (std::size_t i = 1; i < ds.size(); ++i)
                if (mpfr_less_p(ds[i].dist.mid().get(), ds[arg].dist.mid().get())) arg = i;
            for (std::size_t i = 0; i < ds.size(); ++i)
                if (i != arg && ds[i].dist.overlaps(ds[arg].dist)) return std::nullopt;
            OracleDist out{live[arg], ds[arg].dist};
            out.w.offset = ds[arg].nearest;
            return out;
        },
        "oracle minimum");
}

} // namespace thetapow

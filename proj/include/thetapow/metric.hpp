#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thetapow/certreal.hpp"

namespace thetapow {

class DepthUnreachable : public Error {
public:
    using Error::Error;
};

// rho(m): "const:c", "inv_log_sq" (1/log^2(m+1)), "power:p" (m^-p)
struct RhoSchedule {
    enum class Kind { Const, InvLogSq, Power };
    Kind kind = Kind::Const;
    mpq_class param{1};

    static RhoSchedule parse(const std::string& text);
    std::string str() const;
    CertReal eval(long m, prec_t prec) const;
    long double approx(long m) const;
};

// Phi(n): "exp_decay" (2^-n), "power:p" (n^-p), "table:v0,v1,..." (value at level h)
struct PhiSchedule {
    enum class Kind { ExpDecay, Power, Table };
    Kind kind = Kind::ExpDecay;
    mpq_class param{0};
    std::vector<mpq_class> table;

    static PhiSchedule parse(const std::string& text);
    std::string str() const;
    // log2 Phi(2^P) at level h
    CertReal log2_at(const mpz_class& P, unsigned h, prec_t prec) const;
};

struct SolutionRecord {
    std::vector<long> omega; // a_1 <= ... <= a_k = m
    long m = 0;
    mpz_class b;
    CertReal residual;       // |sum a_j^theta - b|
    CertReal threshold;      // rho(m) / m^k
    bool exact = false;      // residual is exactly 0
};

struct CountResult {
    std::vector<SolutionRecord> records;
    std::vector<SolutionRecord> undecided;
    std::uint64_t tuples = 0;
};

struct MetricConfig {
    std::uint64_t enum_cap = std::uint64_t{1} << 26;
    unsigned threads = 1;
    Precision precision{};
};

CountResult count_solutions(const std::string& theta, unsigned k, const RhoSchedule& rho, long M,
                            const MetricConfig& cfg = {});

struct MeasureEstimate {
    std::uint64_t grid = 0;
    std::uint64_t hits = 0;      // certified ||f_theta(w)|| <= threshold for some w
    std::uint64_t undecided = 0; // grid points left open at the precision cap
    CertReal estimate;           // hits / grid * (hi - lo)
    CertReal envelope;           // m^-1 rho(m)
};

MeasureEstimate sample_Vm_measure(unsigned k, const RhoSchedule& rho, long m, const std::string& lo,
                                  const std::string& hi, std::uint64_t grid, const MetricConfig& cfg = {});

// Sequence term: exact integer, or mant * 2^exp rounded up when the minimal
// term is too large to store.
struct SeqTerm {
    mpz_class exact;
    bool compact = false;
    mpz_class mant;
    long exp2 = 0;

    static SeqTerm of(const mpz_class& v) {
        SeqTerm t;
        t.exact = v;
        return t;
    }
    CertReal value(prec_t prec) const;
    std::string str() const;
    static SeqTerm parse(const std::string& text);
};

struct ThetaStep {
    unsigned h = 0;
    mpz_class U;                  // U(s, h)
    mpz_class P;                  // prod_{k<=h} s_k
    CertReal log2_phi;            // log2 Phi(n_h)
    bool minimal_certified = false;
    std::string note;
};

struct ThetaSeq {
    long r = 1;
    long s = 2;
    PhiSchedule phi;
    std::vector<SeqTerm> seq;     // s_0 = s, s_1, ...
    std::vector<ThetaStep> steps; // one per constructed term
    CertReal theta;               // enclosure of phi(seq)
};

struct ThetaConfig {
    Precision precision{512, 65536};
    mpz_class seq_cap{1000000000}; // terms above this are stored compactly
};

ThetaSeq construct_theta(const PhiSchedule& phi, long r, long s, unsigned depth, const ThetaConfig& cfg = {});

// U(s,h) = r prod_{k=1..h} s_k + sum_{d=1..h} prod_{k=d+1..h} s_k
mpz_class U_of(const ThetaSeq& t, unsigned h);
CertReal theta_enclosure(const ThetaSeq& t, prec_t prec);

struct WitnessCheck {
    unsigned h = 0;
    mpz_class U;
    mpz_class P;
    CertReal dist;  // |n_h^theta - 2^U|
    CertReal phi;   // Phi(n_h)
    bool positive = false;
    Verdict verdict = Verdict::UNDECIDED;
    bool pass = false;
    prec_t precision = 0;
};

WitnessCheck verify_witness(const ThetaSeq& t, unsigned h, const Precision& p = {512, 65536});

// condition 2^U (2^(1/(s-1)) - 1) <= Phi(n_h) for a candidate s
Verdict witness_condition(const mpz_class& U, const CertReal& s, const CertReal& log2_phi, prec_t prec);

} // namespace thetapow

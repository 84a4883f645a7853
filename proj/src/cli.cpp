#include "thetapow/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "thetapow/approx.hpp"
#include "thetapow/gaps.hpp"

namespace thetapow::cli {

using nlohmann::json;

namespace {

struct RunConfig {
    long precision_start = 0; // 0: environment or 128
    long precision_cap = 65536;
    std::uint64_t enum_cap = std::uint64_t{1} << 26;
    std::string seq_cap = "1000000000";
    unsigned threads = 1;
    std::string output;
    std::string format = "json";

    Precision precision() const {
        Precision p = precision_from_env();
        if (precision_start > 0) p.start = precision_start;
        p.cap = precision_cap;
        if (p.start < 32) throw ParseError("--precision-start must be >= 32");
        if (p.start > p.cap) throw ParseError("--precision-start exceeds --precision-cap");
        return p;
    }
    SearchConfig search() const {
        SearchConfig s;
        s.enum_cap = enum_cap;
        s.precision = precision();
        return s;
    }
    MetricConfig metric() const {
        MetricConfig m;
        m.enum_cap = enum_cap;
        m.threads = threads;
        m.precision = precision();
        return m;
    }
};

int exit_for(Verdict v) {
    switch (v) {
    case Verdict::LE: return kOk;
    case Verdict::GT: return kFail;
    default: return kUndecided;
    }
}

std::string str_of(long double v) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed << static_cast<double>(v);
    return os.str();
}

json records_json(const std::vector<SolutionRecord>& recs, std::size_t offset, std::size_t limit) {
    json a = json::array();
    for (std::size_t i = offset; i < recs.size() && a.size() < limit; ++i) {
        const auto& r = recs[i];
        a.push_back({{"omega", r.omega},
                     {"m", r.m},
                     {"b", r.b.get_str()},
                     {"residual", interval_json(r.residual)},
                     {"threshold", interval_json(r.threshold)},
                     {"exact", r.exact}});
    }
    return a;
}

// Output document under construction.
struct Doc {
    json j;
    std::vector<std::vector<std::string>> rows; // tsv body, first row is the header
    int code = kOk;
};

// Flattens outputs for tsv when no table was produced.
void flatten(const json& v, const std::string& prefix, std::vector<std::vector<std::string>>& rows) {
    if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
    } else if (v.is_string()) {
        rows.push_back({prefix, v.get<std::string>()});
    } else {
        rows.push_back({prefix, v.dump()});
    }
}

void emit(const Doc& d, const RunConfig& rc, std::ostream& out) {
    std::ofstream file;
    std::ostream* os = &out;
    if (!rc.output.empty() && rc.output != "-") {
        file.open(rc.output);
        if (!file) throw Error("cannot open output file " + rc.output);
        os = &file;
    }
    if (rc.format == "tsv") {
        std::vector<std::vector<std::string>> rows = d.rows;
        if (rows.empty()) {
            rows.push_back({"field", "value"});
            flatten(d.j.value("outputs", json::object()), "", rows);
            if (d.j.contains("verdict")) rows.push_back({"verdict", d.j["verdict"].get<std::string>()});
        }
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) *os << (i ? "\t" : "") << r[i];
            *os << "\n";
        }
    } else {
        *os << d.j.dump(2) << "\n";
    }
}

} // namespace

json interval_json(const CertReal& x, int digits) {
    return {{"lower", x.lower_str(digits)}, {"upper", x.upper_str(digits)}};
}

json theta_to_json(const ThetaSeq& t) {
    json seq = json::array();
    for (const auto& s : t.seq) seq.push_back(s.str());
    json steps = json::array();
    for (const auto& s : t.steps) {
        steps.push_back({{"h", s.h},
                         {"U", s.U.get_str()},
                         {"log2_n", s.P.get_str()},
                         {"log2_phi", interval_json(s.log2_phi)},
                         {"minimal_certified", s.minimal_certified},
                         {"note", s.note}});
    }
    return {{"r", std::to_string(t.r)},
            {"s", std::to_string(t.s)},
            {"phi", t.phi.str()},
            {"seq", seq},
            {"steps", steps},
            {"theta", interval_json(t.theta, 40)}};
}

ThetaSeq theta_from_json(const json& doc, prec_t prec) {
    const json* j = &doc;
    if (doc.contains("outputs") && doc["outputs"].contains("theta_seq")) j = &doc["outputs"]["theta_seq"];
    try {
        ThetaSeq t;
        t.r = std::stol((*j).at("r").get<std::string>());
        t.s = std::stol((*j).at("s").get<std::string>());
        t.phi = PhiSchedule::parse((*j).at("phi").get<std::string>());
        for (const auto& s : (*j).at("seq")) t.seq.push_back(SeqTerm::parse(s.get<std::string>()));
        if (t.seq.empty() || t.seq[0].compact || t.seq[0].exact != t.s)
            throw ParseError("sequence must start with s_0 = s");
        for (std::size_t i = 1; i < t.seq.size(); ++i) {
            if (!t.seq[i - 1].compact && !t.seq[i].compact && t.seq[i].exact < t.seq[i - 1].exact)
                throw ParseError("sequence is not nondecreasing");
            if (t.seq[i - 1].compact && !t.seq[i].compact)
                throw ParseError("exact term after a compact term");
        }
        t.theta = theta_enclosure(t, prec);
        return t;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad theta sequence document: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ParseError("bad theta sequence document: r/s not integers");
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Certified experiments on sums of real powers of integers", "thetapow"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig rc;
    app.add_option("--precision-start", rc.precision_start, "starting precision in bits (default 128)");
    app.add_option("--precision-cap", rc.precision_cap, "precision cap in bits")->capture_default_str();
    app.add_option("--enum-cap", rc.enum_cap, "enumeration cap")->capture_default_str();
    app.add_option("--seq-cap", rc.seq_cap, "largest exactly stored sequence term")->capture_default_str();
    app.add_option("--threads", rc.threads, "worker threads")->capture_default_str();
    app.add_option("-o,--output", rc.output, "output file (default stdout)");
    app.add_option("--format", rc.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}))->capture_default_str();

    std::map<std::string, std::string> in; // positional inputs, echoed verbatim
    auto pos = [&](CLI::App* sc, const std::string& name, const std::string& desc) {
        sc->add_option(name, in[name], desc)->required();
    };

    auto* approx = app.add_subcommand("approx", "approximate alpha mod 1 by a sum of k d-th roots <= n");
    pos(approx, "k", "number of roots");
    pos(approx, "d", "root degree");
    pos(approx, "alpha", "target (decimal or p/q)");
    pos(approx, "n", "height bound");

    auto* single = app.add_subcommand("approx-single", "approximate alpha mod 1 by a^theta, a <= n");
    pos(single, "theta", "exponent");
    pos(single, "alpha", "target");
    pos(single, "n", "bound");

    auto* gap = app.add_subcommand("gap", "element u^theta + v^theta >= x with certified slack");
    pos(gap, "theta", "exponent");
    pos(gap, "x", "left end");

    auto* two = app.add_subcommand("two-powers", "approximate alpha mod 1 by u^theta + v^theta");
    pos(two, "theta", "exponent");
    pos(two, "alpha", "target");
    pos(two, "n", "bound");

    std::size_t limit = std::numeric_limits<std::size_t>::max(), offset = 0;
    auto* count = app.add_subcommand("count", "solutions of ||sum a_j^theta|| <= rho(m)/m^k with a_k = m <= M");
    pos(count, "theta", "exponent");
    pos(count, "k", "tuple length");
    pos(count, "rho", "const:c | inv_log_sq | power:p");
    pos(count, "M", "largest m");
    count->add_option("--limit", limit, "records to print");
    count->add_option("--offset", offset, "records to skip");

    auto* measure = app.add_subcommand("measure", "grid estimate of the measure of V(m) in [lo, hi]");
    pos(measure, "k", "tuple length");
    pos(measure, "rho", "rho schedule");
    pos(measure, "m", "level");
    pos(measure, "lo", "interval start");
    pos(measure, "hi", "interval end");
    pos(measure, "grid", "grid points");

    auto* make = app.add_subcommand("make-theta", "build an exceptional exponent from a Phi schedule");
    pos(make, "phi", "exp_decay | power:p | table:v0,v1,...");
    pos(make, "r", "numerator");
    pos(make, "s", "s_0 >= 2");
    pos(make, "depth", "number of terms to construct");

    auto* verify = app.add_subcommand("verify-theta", "check the witness n_h for a stored sequence");
    pos(verify, "file", "make-theta output");
    pos(verify, "index", "witness index h");

    auto* oracle = app.add_subcommand("oracle", "brute-force references");
    oracle->require_subcommand(1);
    auto* osum = oracle->add_subcommand("sum", "best sum of k d-th roots <= n");
    pos(osum, "k", "number of roots");
    pos(osum, "d", "root degree");
    pos(osum, "alpha", "target");
    pos(osum, "n", "bound");
    long ocap = 0;
    auto* ogap = oracle->add_subcommand("gap", "least u^theta + v^theta >= x");
    pos(ogap, "theta", "exponent");
    pos(ogap, "x", "left end");
    ogap->add_option("--cap", ocap, "largest v (default from x)");

    auto* calib = app.add_subcommand("calibrate", "calibrated constants");
    calib->require_subcommand(1);
    auto* cap_ = calib->add_subcommand("approx", "constant C for approx k d");
    pos(cap_, "ck", "number of roots");
    pos(cap_, "cd", "root degree");
    auto* cgap = calib->add_subcommand("gap", "constant D for gap theta");
    pos(cgap, "ctheta", "exponent");

    auto* sweep = app.add_subcommand("sweep", "exponent tables");
    sweep->require_subcommand(1);
    auto* sg = sweep->add_subcommand("gamma", "gamma(k,d) for k <= kmax, 2 <= d <= dmax");
    pos(sg, "kmax", "largest k");
    pos(sg, "dmax", "largest d");
    auto* sp = sweep->add_subcommand("psi", "psi(theta) on an even grid");
    pos(sp, "lo", "first theta");
    pos(sp, "hi", "last theta");
    pos(sp, "steps", "intervals");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    auto to_long = [&](const std::string& key) {
        const std::string& s = in.at(key);
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw ParseError(key + " must be an integer, got '" + s + "'");
        return v;
    };
    auto to_unsigned = [&](const std::string& key) {
        long v = to_long(key);
        if (v < 0) throw ParseError(key + " must be nonnegative");
        return static_cast<unsigned>(v);
    };

    auto t0 = std::chrono::steady_clock::now();
    Doc d;
    try {
        Precision p = rc.precision();
        json inputs = json::object();
        json outputs = json::object();
        std::string command;
        std::string verdict;
        bool fallback = false;
        long long prec_used = p.start;

        auto echo = [&](std::initializer_list<const char*> keys) {
            for (const char* k : keys) inputs[k] = in.at(k);
        };

        if (*approx) {
            command = "approx";
            echo({"k", "d", "alpha", "n"});
            ApproxConfig cfg;
            cfg.search = rc.search();
            ApproxCertificate c =
                approx_sum_roots(to_unsigned("k"), to_unsigned("d"), in["alpha"], to_long("n"), cfg);
            json shift = json::array();
            for (auto v : c.shift_coeffs) shift.push_back(v);
            outputs = {{"b", c.b},
                       {"xi", c.xi},
                       {"shift_coeffs", shift},
                       {"reduced_n", c.reduced_n},
                       {"dist", interval_json(c.dist)},
                       {"exponent", c.exponent.get_str()},
                       {"constant", c.constant ? interval_json(*c.constant) : json(nullptr)},
                       {"bound", c.bound ? interval_json(*c.bound) : json(nullptr)},
                       {"note", c.note}};
            verdict = verdict_name(c.verdict);
            fallback = c.fallback;
            prec_used = c.precision;
            d.code = exit_for(c.verdict);
        } else if (*single) {
            command = "approx-single";
            echo({"theta", "alpha", "n"});
            SingleResult r = approx_single(parse_rational(in["theta"]), in["alpha"], to_long("n"), p);
            outputs = {{"a", r.a},
                       {"level", r.level.get_str()},
                       {"dist", interval_json(r.dist)},
                       {"bound", interval_json(r.bound)}};
            verdict = verdict_name(r.verdict);
            prec_used = r.precision;
            d.code = exit_for(r.verdict);
        } else if (*gap) {
            command = "gap";
            echo({"theta", "x"});
            GapWitness w = gap_element(in["theta"], in["x"], p);
            CertReal bound = gap_bound(w.theta, w.x, p);
            CertReal constant = gap_constant(w.theta, p);
            Verdict v = compare_le(w.slack, bound);
            outputs = {{"u", w.u.get_str()},
                       {"v", w.v.get_str()},
                       {"value", interval_json(w.value)},
                       {"slack", interval_json(w.slack)},
                       {"psi", w.psi.get_str()},
                       {"regime", regime_name(w.regime)},
                       {"constant", interval_json(constant)},
                       {"bound", interval_json(bound)},
                       {"note", w.note}};
            if (w.internals) {
                const GapInternals& g = *w.internals;
                outputs["internals"] = {{"s", g.s.get_str()},
                                        {"E", interval_json(g.E)},
                                        {"E_zero", g.E_zero},
                                        {"k", {{"lower", g.k_lo.get_str()}, {"upper", g.k_hi.get_str()}}},
                                        {"l", g.l.get_str()},
                                        {"l_safe_rounded", g.l_safe_rounded}};
            }
            verdict = verdict_name(v);
            fallback = w.fallback;
            d.code = exit_for(v);
        } else if (*two) {
            command = "two-powers";
            echo({"theta", "alpha", "n"});
            TwoPowers r = approx_two_powers(in["theta"], in["alpha"], to_long("n"), p);
            outputs = {{"u", r.u},
                       {"v", r.v},
                       {"alpha_star", r.alpha_star.get_str()},
                       {"dist", interval_json(r.dist)},
                       {"bound", r.bound ? interval_json(*r.bound) : json(nullptr)},
                       {"single_power", r.single_power},
                       {"note", r.note}};
            verdict = verdict_name(r.verdict);
            fallback = r.fallback;
            d.code = exit_for(r.verdict);
        } else if (*count) {
            command = "count";
            echo({"theta", "k", "rho", "M"});
            RhoSchedule rho = RhoSchedule::parse(in["rho"]);
            CountResult r = count_solutions(in["theta"], to_unsigned("k"), rho, to_long("M"), rc.metric());
            std::size_t exact = 0;
            for (const auto& x : r.records) exact += x.exact;
            outputs = {{"tuples", r.tuples},
                       {"total_records", r.records.size()},
                       {"exact_records", exact},
                       {"offset", offset},
                       {"records", records_json(r.records, offset, limit)},
                       {"undecided", records_json(r.undecided, 0, r.undecided.size())}};
            inputs["limit"] = limit == std::numeric_limits<std::size_t>::max() ? json(nullptr) : json(limit);
            inputs["offset"] = offset;
            verdict = r.undecided.empty() ? "pass" : "UNDECIDED";
            d.code = r.undecided.empty() ? kOk : kUndecided;
            d.rows.push_back({"m", "omega", "b", "residual_upper", "exact"});
            for (std::size_t i = offset; i < r.records.size() && d.rows.size() <= limit; ++i) {
                const auto& x = r.records[i];
                std::string om;
                for (std::size_t q = 0; q < x.omega.size(); ++q) om += (q ? "," : "") + std::to_string(x.omega[q]);
                d.rows.push_back({std::to_string(x.m), om, x.b.get_str(), x.residual.upper_str(20),
                                  x.exact ? "1" : "0"});
            }
        } else if (*measure) {
            command = "measure";
            echo({"k", "rho", "m", "lo", "hi", "grid"});
            long grid = to_long("grid");
            if (grid < 0) throw ParseError("grid must be positive");
            MeasureEstimate e = sample_Vm_measure(to_unsigned("k"), RhoSchedule::parse(in["rho"]), to_long("m"),
                                                  in["lo"], in["hi"], static_cast<std::uint64_t>(grid), rc.metric());
            outputs = {{"grid", e.grid},
                       {"hits", e.hits},
                       {"undecided", e.undecided},
                       {"estimate", interval_json(e.estimate)},
                       {"envelope", interval_json(e.envelope)}};
            verdict = e.undecided == 0 ? "pass" : "UNDECIDED";
            d.code = e.undecided == 0 ? kOk : kUndecided;
        } else if (*make) {
            command = "make-theta";
            echo({"phi", "r", "s", "depth"});
            ThetaConfig cfg;
            cfg.precision = p;
            try {
                cfg.seq_cap = mpz_class(rc.seq_cap);
            } catch (const std::invalid_argument&) {
                throw ParseError("--seq-cap must be an integer");
            }
            ThetaSeq t = construct_theta(PhiSchedule::parse(in["phi"]), to_long("r"), to_long("s"),
                                         to_unsigned("depth"), cfg);
            bool minimal = true;
            for (const auto& s : t.steps) minimal = minimal && s.minimal_certified;
            outputs = {{"theta_seq", theta_to_json(t)}, {"all_minimal", minimal}};
            verdict = "pass";
            fallback = !minimal;
        } else if (*verify) {
            command = "verify-theta";
            echo({"file"});
            inputs["h"] = in.at("index");
            std::ifstream f(in["file"]);
            if (!f) throw ParseError("cannot read " + in["file"]);
            json doc;
            try {
                doc = json::parse(f);
            } catch (const json::exception& e) {
                throw ParseError(std::string("invalid JSON: ") + e.what());
            }
            long h = to_long("index");
            if (h < 0) throw ParseError("h must be nonnegative");
            ThetaSeq t = theta_from_json(doc, p.start);
            WitnessCheck w = verify_witness(t, static_cast<unsigned>(h), p);
            outputs = {{"h", w.h},
                       {"U", w.U.get_str()},
                       {"log2_n", w.P.get_str()},
                       {"dist", interval_json(w.dist)},
                       {"phi", interval_json(w.phi)},
                       {"positive", w.positive},
                       {"theta", interval_json(t.theta, 40)}};
            verdict = w.pass ? "pass" : "fail";
            prec_used = w.precision;
            d.code = w.pass ? kOk : kFail;
        } else if (*osum) {
            command = "oracle sum";
            echo({"k", "d", "alpha", "n"});
            OracleSum r = oracle_min_sum(to_unsigned("k"), to_unsigned("d"), parse_rational(in["alpha"]),
                                         to_long("n"), rc.search());
            outputs = {{"b", r.b}, {"dist", interval_json(r.dist)}};
            verdict = "pass";
        } else if (*ogap) {
            command = "oracle gap";
            echo({"theta", "x"});
            mpq_class theta = parse_rational(in["theta"]), x = parse_rational(in["x"]);
            long cap = ocap > 0 ? ocap : default_oracle_cap(theta, x);
            inputs["cap"] = cap;
            NextElement e = oracle_next_element(theta, x, cap, p);
            outputs = {{"u", e.u.get_str()},
                       {"v", e.v.get_str()},
                       {"value", interval_json(e.value)},
                       {"gap", interval_json(e.value - CertReal::from_rational(x, p.start))}};
            verdict = "pass";
        } else if (*cap_) {
            command = "calibrate approx";
            echo({"ck", "cd"});
            ApproxConfig cfg;
            cfg.search = rc.search();
            auto c = calibrated_constant(to_unsigned("ck"), to_unsigned("cd"), cfg);
            outputs = {{"constant", c ? interval_json(*c) : json(nullptr)},
                       {"grid_n", 256},
                       {"grid_alpha", {"0", "1/2", "1/3", kPiMinus3}}};
            verdict = c ? "pass" : "UNDECIDED";
            d.code = c ? kOk : kUndecided;
        } else if (*cgap) {
            command = "calibrate gap";
            echo({"ctheta"});
            mpq_class theta = parse_rational(in["ctheta"]);
            outputs = {{"constant", interval_json(gap_constant(theta, p))},
                       {"psi", psi(theta).get_str()},
                       {"regime", regime_name(regime_of(theta))}};
            verdict = "pass";
        } else if (*sg) {
            command = "sweep gamma";
            echo({"kmax", "dmax"});
            unsigned kmax = to_unsigned("kmax"), dmax = to_unsigned("dmax");
            json rows = json::array();
            d.rows.push_back({"k", "d", "xi", "gamma", "gamma_lower", "gamma_star"});
            for (unsigned k = 1; k <= kmax; ++k)
                for (unsigned dd = 2; dd <= dmax; ++dd) {
                    std::vector<std::string> row{std::to_string(k), std::to_string(dd),
                                                 std::to_string(xi_for(k, dd)), gamma(k, dd).get_str(),
                                                 gamma_lower(k, dd).get_str(), gamma_star(k, dd).get_str()};
                    rows.push_back({{"k", k},
                                    {"d", dd},
                                    {"xi", xi_for(k, dd)},
                                    {"gamma", row[3]},
                                    {"gamma_lower", row[4]},
                                    {"gamma_star", row[5]}});
                    d.rows.push_back(row);
                }
            outputs = {{"rows", rows}};
            verdict = "pass";
        } else if (*sp) {
            command = "sweep psi";
            echo({"lo", "hi", "steps"});
            mpq_class lo = parse_rational(in["lo"]), hi = parse_rational(in["hi"]);
            long steps = to_long("steps");
            if (steps < 1 || hi < lo) throw DomainError("need steps >= 1 and lo <= hi");
            json rows = json::array();
            d.rows.push_back({"theta", "psi", "regime"});
            for (long i = 0; i <= steps; ++i) {
                mpq_class th = lo + (hi - lo) * mpq_class(i, steps);
                th.canonicalize();
                std::string ps = psi(th).get_str(), reg = regime_name(regime_of(th));
                rows.push_back({{"theta", th.get_str()}, {"psi", ps}, {"regime", reg}});
                d.rows.push_back({th.get_str(), ps, reg});
            }
            outputs = {{"rows", rows}};
            verdict = "pass";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        d.j = {{"schema_version", kSchemaVersion},
               {"command", command},
               {"inputs", inputs},
               {"outputs", outputs},
               {"verdict", verdict},
               {"precision", prec_used},
               {"precision_cap", p.cap},
               {"fallback", fallback},
               {"wall_time_s", str_of(secs)}};
        emit(d, rc, out);
        return d.code;
    } catch (const Undecided& e) {
        err << "undecided: " << e.what() << "\n";
        return kUndecided;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace thetapow::cli

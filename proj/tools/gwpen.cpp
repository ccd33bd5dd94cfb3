// gwpen: command-line front end.
//
// Exit codes: 0 success, 1 verification failure, 2 malformed input or
// configuration, 3 numeric non-convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gwpen/acceptance.hpp"
#include "gwpen/jets.hpp"
#include "gwpen/limits.hpp"
#include "gwpen/martingales.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/penalization.hpp"
#include "gwpen/spinelaw.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gwpen;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { ok = 0, verification_failed = 1, bad_config = 2, no_convergence = 3 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string q_path;
    std::string mode;  // "exact", "float" or empty (take it from the file)
    double tol = 0.0;  // 0: per-subcommand default
    std::uint64_t seed = 0;
    std::string out_dir;

    void validate() const
    {
        if (!mode.empty() && mode != "exact" && mode != "float")
            throw ConfigError("--mode must be 'exact' or 'float', got '" + mode + "'");
        if (tol != 0.0 && !(tol > 0.0 && tol < 1.0)) throw ConfigError("--tol must lie in (0, 1)");
    }
    double tol_or(double fallback) const { return tol > 0.0 ? tol : fallback; }
};

struct Law {
    bool exact = true;
    std::vector<std::string> literals;

    OffspringDistribution<Rational> rational() const { return exact_law(literals); }
    OffspringDistribution<double> real() const { return rational().to_float(); }
};

Law load_law(const RunConfig& cfg)
{
    if (cfg.q_path.empty()) throw ConfigError("--q <distribution file> is required");
    std::ifstream in(cfg.q_path);
    if (!in) throw ConfigError("cannot open distribution file '" + cfg.q_path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("distribution file '" + cfg.q_path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array())
        throw ConfigError("distribution file needs an object with a \"probs\" array");
    Law law;
    for (const auto& v : j["probs"]) {
        if (v.is_string()) law.literals.push_back(v.get<std::string>());
        else if (v.is_number()) law.literals.push_back(v.dump());
        else throw ConfigError("\"probs\" entries must be rational strings or numbers");
    }
    std::string mode = j.value("mode", std::string("exact"));
    if (!cfg.mode.empty()) mode = cfg.mode;
    if (mode != "exact" && mode != "float") throw ConfigError("mode must be 'exact' or 'float', got '" + mode + "'");
    law.exact = mode == "exact";
    if (!law.exact) {
        // Float configs are validated with the float tolerance.
        std::vector<double> p;
        for (const auto& s : law.literals) p.push_back(to_double(parse_rational(s)));
        (void)OffspringDistribution<double>(p);
    } else {
        (void)law.rational();
    }
    return law;
}

/// Writes `text` to out_dir/name, or to stdout when no directory is set.
/// Returns the path written ("-" for stdout).
std::string emit(const RunConfig& cfg, const std::string& name, const std::string& text)
{
    if (cfg.out_dir.empty()) {
        std::cout << text;
        return "-";
    }
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    return path.string();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <class T>
json scalar_json(const T& x)
{
    if constexpr (is_exact_v<T>) return format_scalar(x);
    else return x;
}

template <class T>
T parse_scalar(const std::string& text)
{
    const Rational r = parse_rational(text);
    if constexpr (is_exact_v<T>) return r;
    else return to_double(r);
}

// ---------------------------------------------------------------------------

template <class T>
int cmd_inspect(const RunConfig& cfg, const OffspringDistribution<T>& q)
{
    const auto c = characterize(q);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["mode"] = is_exact_v<T> ? "exact" : "float";
    j["mu"] = scalar_json(c.mu);
    j["kappa"] = scalar_json(c.kappa);
    j["kappa_exact"] = c.kappa_exact;
    j["a_min"] = c.a_min;
    j["gamma"] = scalar_json(c.gamma);
    j["regime"] = to_string(c.regime);
    if (cfg.out_dir.empty()) {
        std::cout << "mu: " << format_scalar(c.mu) << "\nkappa: " << format_scalar(c.kappa)
                  << (c.kappa_exact ? "" : " (irrational, nearest double)") << "\na_min: " << c.a_min
                  << "\ngamma: " << format_scalar(c.gamma) << "\nregime: " << to_string(c.regime) << '\n';
    } else {
        emit(cfg, "inspect.json", dump(j));
    }
    return ok;
}

struct JetArgs {
    unsigned n = 1;
    std::string s = "0";
    unsigned p = 2;
};

template <class T>
int cmd_jet(const RunConfig& cfg, const OffspringDistribution<T>& q, const JetArgs& a)
{
    const T s = parse_scalar<T>(a.s);
    std::ostringstream csv;
    csv << "n,s,p,value\n";
    for (unsigned n = 0; n <= a.n; ++n) {
        const auto j = iterate_jet(q, n, s, a.p);
        for (unsigned k = 0; k <= a.p; ++k)
            csv << n << ',' << format_scalar(s) << ',' << k << ',' << format_scalar(j.derivative(k)) << '\n';
    }
    emit(cfg, "jet.csv", csv.str());
    return ok;
}

struct LimitsArgs {
    unsigned p = 2;
    std::vector<std::string> a;
    std::vector<std::string> s;
};

int cmd_limits(const RunConfig& cfg, const OffspringDistribution<double>& q, const LimitsArgs& a)
{
    const auto c = characterize(q);
    std::ostringstream csv;
    csv << "quantity,p,s_or_a,estimate,iterations,residual\n";
    if (!a.a.empty()) {
        if (!is_supercritical(c.regime)) throw DomainError("phi needs a super-critical law");
        LaplaceOptions lo;
        lo.tol = cfg.tol_or(lo.tol);
        const LaplaceTransform lt(q, a.p, lo);
        for (const auto& text : a.a) {
            const double av = to_double(parse_rational(text));
            const auto v = lt.evaluate(av, a.p);
            const double residual = lt.schroeder_residual(av);
            for (unsigned k = 0; k <= a.p; ++k)
                csv << "phi_" << k << ',' << k << ',' << text << ',' << format_scalar(v.values[k]) << ','
                    << v.iterations << ',' << format_scalar(k == 0 ? residual : v.last_change) << '\n';
        }
    }
    EstimateOptions eo;
    eo.tol = cfg.tol_or(eo.tol);
    for (const auto& text : a.s) {
        const double sv = to_double(parse_rational(text));
        if (c.regime == Regime::supercritical_boettcher) {
            const auto b = estimate_boettcher(q, a.p, sv, eo);
            csv << "b,0," << text << ',' << format_scalar(b.b.value) << ',' << b.b.iterations << ','
                << format_scalar(b.b.last_change) << '\n';
            csv << "K_p," << a.p << ',' << text << ',' << format_scalar(b.K.value) << ',' << b.K.iterations << ','
                << format_scalar(b.K.last_change) << '\n';
        } else {
            for (unsigned k = 1; k <= a.p; ++k) {
                const auto e = estimate_Cp(q, k, sv, eo);
                csv << to_string(e.kind) << ',' << k << ',' << text << ',' << format_scalar(e.value) << ','
                    << e.iterations << ',' << format_scalar(e.last_change) << '\n';
            }
        }
    }
    emit(cfg, "limits.csv", csv.str());
    return ok;
}

struct MartingaleArgs {
    std::string spec = "penalized_p";
    unsigned p = 1;
    double a = 0.0;
    unsigned n0 = 0;
    unsigned nmax = 4;
};

template <class T>
MartingaleSpec<T> build_spec(const OffspringDistribution<T>& q, const MartingaleArgs& m, const LaplaceOptions& lo)
{
    switch (parse_martingale_kind(m.spec)) {
    case MartingaleKind::ratio: return MartingaleSpec<T>::ratio(q);
    case MartingaleKind::extinction: return MartingaleSpec<T>::extinction(q);
    case MartingaleKind::sized_biased_extinct: return MartingaleSpec<T>::sized_biased_extinct(q);
    case MartingaleKind::schroeder_unit: return MartingaleSpec<T>::schroeder_unit(q);
    case MartingaleKind::boettcher_unit: return MartingaleSpec<T>::boettcher_unit(q);
    case MartingaleKind::critical_size: return MartingaleSpec<T>::critical_size(q);
    case MartingaleKind::penalized_p: return MartingaleSpec<T>::penalized(q, m.p, m.a, lo);
    case MartingaleKind::two_index: return MartingaleSpec<T>::two_index(q, m.p, m.a, m.n0, lo);
    case MartingaleKind::conjugate_penalized: return MartingaleSpec<T>::conjugate_penalized(q, m.p, m.a, lo);
    }
    throw DomainError("unknown martingale");
}

template <class T>
int cmd_martingale(const RunConfig& cfg, const OffspringDistribution<T>& q, const MartingaleArgs& m)
{
    LaplaceOptions lo;
    lo.tol = 1e-13;
    const auto spec = build_spec(q, m, lo);
    if (m.nmax < spec.n0()) throw ConfigError("--nmax must be at least n0");
    const auto rep = verify_martingale(spec, m.nmax, cfg.tol_or(1e-9));
    json j;
    j["schema_version"] = kSchemaVersion;
    j["spec"] = spec.name();
    j["p"] = spec.p();
    j["a"] = spec.a();
    j["n0"] = spec.n0();
    j["n_max"] = m.nmax;
    j["exact"] = rep.exact;
    j["passed"] = rep.passed;
    j["mean_one"] = rep.mean_one;
    j["checks"] = rep.checks;
    j["max_relative_gap"] = rep.max_relative_gap;
    json v = json::array();
    for (const auto& x : rep.violations)
        v.push_back({{"n", x.n}, {"z", x.z}, {"conditional_mean", scalar_json(x.lhs)}, {"value", scalar_json(x.rhs)}});
    j["violations"] = v;
    std::ostringstream csv;
    csv << "n,mean\n";
    for (std::size_t k = 0; k < rep.means.size(); ++k) csv << spec.n0() + k << ',' << format_scalar(rep.means[k]) << '\n';
    const std::string report = emit(cfg, "martingale.json", dump(j));
    if (cfg.out_dir.empty()) std::cout << '\n';
    emit(cfg, "martingale.csv", csv.str());
    if (!rep.passed) {
        std::cerr << "martingale property fails; report: " << report << '\n';
        return verification_failed;
    }
    return ok;
}

struct PenalizeArgs {
    std::string weight = "geom:p=1,s=0.5";
    std::string event = "full";
    unsigned n = 1;
    unsigned mmax = 0;
    unsigned mstep = 0;
};

template <class T>
int cmd_penalize(const RunConfig& cfg, const OffspringDistribution<T>& q, const PenalizeArgs& a)
{
    PenalizationProblem<T> pr{q, parse_weight<T>(a.weight), parse_event(a.event), a.n, {}};
    PenalizationOptions opts;
    opts.tol = cfg.tol_or(opts.tol);
    opts.laplace.tol = 1e-13;
    if (a.mstep > 0) {
        if (a.mmax == 0) throw ConfigError("--mstep needs --mmax");
        for (unsigned m = a.mstep; m <= a.mmax; m += a.mstep) pr.m_schedule.push_back(m);
    } else if (a.mmax > 0) {
        const auto regime = select_martingale(q, pr.weight, opts.laplace).first;
        for (unsigned m : default_schedule(regime))
            if (m <= a.mmax) pr.m_schedule.push_back(m);
        if (pr.m_schedule.empty()) pr.m_schedule.push_back(a.mmax);
    }
    const auto r = limit_ratio(pr, opts);
    std::ostringstream csv;
    csv << "m,ratio,error,log_error\n";
    for (const auto& pt : r.table)
        csv << pt.m << ',' << format_scalar(pt.ratio) << ',' << format_scalar(pt.error) << ','
            << format_scalar(pt.log_error) << '\n';
    json j;
    j["schema_version"] = kSchemaVersion;
    j["weight"] = pr.weight.describe();
    j["event"] = pr.event.label;
    j["n"] = a.n;
    j["limit"] = scalar_json(r.limit);
    j["limit_value"] = to_double(r.limit);
    j["regime"] = to_string(r.regime);
    j["martingale"] = to_string(r.martingale);
    j["errors_decreasing"] = r.errors_decreasing;
    j["converged"] = r.converged;
    j["final_error"] = r.table.empty() ? 0.0 : r.table.back().error;
    emit(cfg, "penalize.csv", csv.str());
    if (cfg.out_dir.empty()) std::cout << '\n';
    emit(cfg, "penalize.json", dump(j));
    if (!r.converged) {
        std::cerr << "ratio did not converge: final error "
                  << (r.table.empty() ? std::string("n/a") : format_scalar(r.table.back().error))
                  << (r.errors_decreasing ? "" : ", errors not decreasing") << '\n';
        return no_convergence;
    }
    return ok;
}

struct SpineArgs {
    unsigned p = 1;
    double a = 0.0;
    unsigned n0 = 0;
    unsigned height = 4;
    std::size_t count = 1;
    unsigned n = 2;
    unsigned maxk = 3;
    std::size_t samples = 10000;
};

template <class T>
SpineLaw<T> make_spine(const OffspringDistribution<T>& q, const SpineArgs& a)
{
    LaplaceOptions lo;
    lo.tol = 1e-13;
    return SpineLaw<T>(q, a.p, a.a, a.n0, lo);
}

template <class T>
int cmd_spine_sample(const RunConfig& cfg, const OffspringDistribution<T>& q, const SpineArgs& a)
{
    const auto law = make_spine(q, a);
    const SpineSampler<T> sampler(law);
    std::ostringstream out;
    for (std::size_t i = 0; i < a.count; ++i) out << sampler.sample(a.height, cfg.seed, i).to_string() << '\n';
    emit(cfg, "spine_sample.txt", out.str());
    return ok;
}

template <class T>
int cmd_spine_verify(const RunConfig& cfg, const OffspringDistribution<T>& q, const SpineArgs& a)
{
    const auto law = make_spine(q, a);
    LaplaceOptions lo;
    lo.tol = 1e-13;
    const auto rep = verify_measure_equality(law, a.n, a.maxk, cfg.tol_or(1e-8), {}, lo);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["p"] = a.p;
    j["a"] = a.a;
    j["n0"] = a.n0;
    j["n"] = a.n;
    j["max_children"] = a.maxk;
    j["exact"] = rep.exact;
    j["equal"] = rep.equal;
    j["max_gap"] = rep.max_gap;
    j["shapes_checked"] = rep.shapes_checked;
    j["sum_Q"] = scalar_json(rep.sum_Q);
    j["sum_MP"] = scalar_json(rep.sum_MP);
    j["worst_shape"] = rep.worst_shape;
    const std::string path = emit(cfg, "spine_verify.json", dump(j));
    if (!rep.equal) {
        std::cerr << "measure equality fails; report: " << path << '\n';
        return verification_failed;
    }
    return ok;
}

template <class T>
int cmd_spine_stats(const RunConfig& cfg, const OffspringDistribution<T>& q, const SpineArgs& a)
{
    const auto law = make_spine(q, a);
    const auto s = spine_statistics(law, a.height, a.samples, cfg.seed, a.n);
    std::ostringstream csv;
    write_spine_csv(csv, s);
    emit(cfg, "spine_stats.csv", csv.str());
    return s.type_mass_violations == 0 ? ok : verification_failed;
}

int cmd_verify_all(const RunConfig& cfg, const std::vector<std::string>& only)
{
    std::vector<std::string> ids = only;
    if (ids.empty())
        for (const auto& [id, fn] : acceptance::registry()) ids.push_back(id);
    std::ostringstream report;
    json j;
    j["schema_version"] = kSchemaVersion;
    json crit = json::array();
    bool all = true;
    for (const auto& id : ids) {
        const auto r = acceptance::run(id);
        acceptance::print(std::cout, r);
        std::cout.flush();
        acceptance::print(report, r, false);
        json checks = json::array();
        for (const auto& c : r.checks)
            checks.push_back({{"name", c.name},
                              {"passed", c.passed},
                              {"informational", c.informational},
                              {"detail", c.timing ? std::string() : c.detail}});
        crit.push_back({{"id", r.id}, {"title", r.title}, {"passed", r.passed()}, {"checks", checks}});
        all = all && r.passed();
    }
    j["criteria"] = crit;
    j["passed"] = all;
    std::string path = "-";
    if (!cfg.out_dir.empty()) {
        emit(cfg, "verify_all.txt", report.str());
        path = emit(cfg, "verify_all.json", dump(j));
    }
    if (!all) {
        std::cerr << "verification failed; report: " << path << '\n';
        return verification_failed;
    }
    return ok;
}

/// Runs `body` with the law in the configured mode.
template <class Body>
int with_law(const RunConfig& cfg, Body&& body)
{
    const Law law = load_law(cfg);
    if (law.exact) return body(law.rational());
    return body(law.real());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Galton-Watson penalization toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;
    app.add_option("--q", cfg.q_path, "distribution file (JSON)");
    app.add_option("--mode", cfg.mode, "exact or float (overrides the file)");
    app.add_option("--tol", cfg.tol, "tolerance (subcommand default when omitted)");
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--out", cfg.out_dir, "output directory (stdout when omitted)");

    auto* inspect = app.add_subcommand("inspect", "mean, extinction probability, minimal support, f'(kappa), regime");

    JetArgs jet_args;
    auto* jet = app.add_subcommand("jet", "CSV of f_n^{(k)}(s), n <= N, k <= P");
    jet->add_option("--n", jet_args.n, "largest iterate")->capture_default_str();
    jet->add_option("--s", jet_args.s, "point (rational or decimal)")->capture_default_str();
    jet->add_option("--p", jet_args.p, "largest derivative order")->capture_default_str();

    LimitsArgs lim_args;
    auto* limits = app.add_subcommand("limits", "phi and its derivatives, C_p, b and K_p");
    limits->add_option("--p", lim_args.p, "derivative order")->capture_default_str();
    limits->add_option("--a", lim_args.a, "Laplace arguments")->delimiter(',');
    limits->add_option("--s", lim_args.s, "points for C_p / b / K_p")->delimiter(',');

    MartingaleArgs mart_args;
    auto* mart = app.add_subcommand("martingale", "verify the martingale property of one family");
    mart->add_option("--spec", mart_args.spec, "family name")->capture_default_str();
    mart->add_option("--p", mart_args.p, "degree")->capture_default_str();
    mart->add_option("--a", mart_args.a, "Laplace parameter")->capture_default_str();
    mart->add_option("--n0", mart_args.n0, "starting generation (two_index)")->capture_default_str();
    mart->add_option("--nmax", mart_args.nmax, "last generation")->capture_default_str();

    PenalizeArgs pen_args;
    auto* pen = app.add_subcommand("penalize", "convergence table of the penalized ratio");
    pen->add_option("--weight", pen_args.weight, "geom:p=..,s=.. | laplace:p=..,a=.. | conj_laplace:p=..,a=..")
        ->capture_default_str();
    pen->add_option("--event", pen_args.event, "full | z_eq:k | z_in:k1,k2 | z_le:k")->capture_default_str();
    pen->add_option("--n", pen_args.n, "generation of the event")->capture_default_str();
    pen->add_option("--mmax", pen_args.mmax, "largest m (regime schedule truncated)");
    pen->add_option("--mstep", pen_args.mstep, "use m = mstep, 2 mstep, ..., mmax");

    SpineArgs sp_args;
    auto* spine = app.add_subcommand("spine", "typed spine trees");
    spine->require_subcommand(1);
    auto add_law_opts = [&](CLI::App* c) {
        c->add_option("--p", sp_args.p, "root type")->capture_default_str();
        c->add_option("--a", sp_args.a, "Laplace parameter")->capture_default_str();
        c->add_option("--n0", sp_args.n0, "root generation")->capture_default_str();
    };
    auto* sp_sample = spine->add_subcommand("sample", "typed trees, one per line");
    add_law_opts(sp_sample);
    sp_sample->add_option("--height", sp_args.height, "truncation height")->capture_default_str();
    sp_sample->add_option("--count", sp_args.count, "number of trees")->capture_default_str();
    auto* sp_verify = spine->add_subcommand("verify", "shape marginal against M dP on all shapes");
    add_law_opts(sp_verify);
    sp_verify->add_option("--n", sp_args.n, "truncation height")->capture_default_str();
    sp_verify->add_option("--maxk", sp_args.maxk, "largest child count enumerated")->capture_default_str();
    auto* sp_stats = spine->add_subcommand("stats", "generation sizes, type counts, shape frequencies (CSV)");
    add_law_opts(sp_stats);
    sp_stats->add_option("--height", sp_args.height, "truncation height")->capture_default_str();
    sp_stats->add_option("--samples", sp_args.samples, "number of samples")->capture_default_str();
    sp_stats->add_option("--n", sp_args.n, "shape level")->capture_default_str();

    std::vector<std::string> only;
    auto* verify_all = app.add_subcommand("verify-all", "run the acceptance suite");
    verify_all->add_option("--criterion", only, "restrict to these criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_config;
    }

    try {
        cfg.validate();
        if (*inspect) return with_law(cfg, [&](const auto& q) { return cmd_inspect(cfg, q); });
        if (*jet) return with_law(cfg, [&](const auto& q) { return cmd_jet(cfg, q, jet_args); });
        if (*limits) return cmd_limits(cfg, load_law(cfg).real(), lim_args);
        if (*mart) return with_law(cfg, [&](const auto& q) { return cmd_martingale(cfg, q, mart_args); });
        if (*pen) return with_law(cfg, [&](const auto& q) { return cmd_penalize(cfg, q, pen_args); });
        if (*sp_sample) return with_law(cfg, [&](const auto& q) { return cmd_spine_sample(cfg, q, sp_args); });
        if (*sp_verify) return with_law(cfg, [&](const auto& q) { return cmd_spine_verify(cfg, q, sp_args); });
        if (*sp_stats) return with_law(cfg, [&](const auto& q) { return cmd_spine_stats(cfg, q, sp_args); });
        if (*verify_all) return cmd_verify_all(cfg, only);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (previous " << format_scalar(e.previous()) << ", last "
                  << format_scalar(e.last()) << ")\n";
        return no_convergence;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return no_convergence;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_config;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return verification_failed;
    }
    return ok;
}

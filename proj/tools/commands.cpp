#include "commands.hpp"

#include "gradcheck.hpp"
#include "rmdp_file.hpp"
#include "trace_csv.hpp"

#include "drpg/domains.hpp"
#include "drpg/drpg.hpp"
#include "drpg/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

namespace drpg::cli {

using nlohmann::json;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string output;
    std::string format = "csv";
    unsigned threads = 1;
    std::ostream* warnings = nullptr;
};

void report_warnings(const RmdpFile& file, const GlobalOptions& g) {
    if (g.warnings == nullptr) {
        return;
    }
    for (const std::string& w : file.ambiguity.warnings()) {
        *g.warnings << "warning: " << w << '\n';
    }
}

struct SourceOptions {
    std::string instance;
    std::string generate;
    std::size_t states = 0;
    std::size_t actions = 0;
    std::size_t branch = 2;
    double gamma = kUnset;
    std::size_t demand_max = 3;
    std::string kind;
    double kappa = 0.2;
    double r = 0.1;
    bool state_action_costs = false;
    bool parametric = false;
    std::size_t seeds = 1;
};

struct SolverOptions {
    std::size_t iterations = 100;
    double alpha = kUnset;
    double delta = 1.0;
    double eps0 = 1.0;
    double eps_decay = kUnset;
    std::string inner = "vi";
    std::size_t inner_iters = 5000;
    double inner_step = 0.0;
    bool no_wall_clock = false;
    std::string summary;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// -- output helpers ---------------------------------------------------------------

class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw InvalidInput("cannot open '" + path + "' for writing");
            }
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

json number_or_null(double x) {
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json record_to_json(const TraceRecord& r) {
    json j;
    j["iter"] = r.iter;
    j["objective"] = r.objective;
    j["inner_gap_bound"] = r.inner_gap_bound ? json(*r.inner_gap_bound) : json(nullptr);
    j["epsilon_t"] = r.epsilon_t;
    j["policy_grad_norm"] = r.policy_grad_norm;
    j["best_so_far"] = r.best_so_far;
    j["wall_ms"] = r.wall_ms;
    return j;
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw InvalidInput("cannot open '" + path + "' for writing");
    }
    file << doc.dump(2) << '\n';
}

/// Linear interpolation between order statistics.
double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned threads, F&& fn) {
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < count; ++k) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) {
            std::rethrow_exception(errors[i]);
        }
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

// -- instances --------------------------------------------------------------------

AmbiguitySpec make_spec(const std::string& kind_name, const TransitionKernel& nominal,
                        const SourceOptions& src) {
    const AmbiguityKind kind = ambiguity_kind_from_string(kind_name);
    if (is_sa_rectangular(kind)) {
        return AmbiguitySpec::sa_rect(kind, nominal, src.kappa);
    }
    if (is_s_rectangular(kind)) {
        return AmbiguitySpec::s_rect(kind, nominal, src.kappa);
    }
    if (kind == AmbiguityKind::RContamination) {
        return AmbiguitySpec::r_contamination(nominal, src.r);
    }
    return AmbiguitySpec::singleton(nominal);
}

RmdpFile generate_instance(const std::string& domain, const SourceOptions& src, std::uint64_t seed) {
    Instance inst = [&] {
        if (domain == "garnet") {
            GarnetConfig cfg;
            cfg.states = src.states ? src.states : 10;
            cfg.actions = src.actions ? src.actions : 3;
            cfg.branching = src.branch;
            cfg.seed = seed;
            cfg.gamma = std::isnan(src.gamma) ? 0.9 : src.gamma;
            cfg.state_action_costs = src.state_action_costs;
            return garnet_generate(cfg);
        }
        if (domain == "inventory") {
            InventoryConfig cfg;
            cfg.states = src.states ? src.states : 8;
            cfg.actions = src.actions ? src.actions : 3;
            cfg.gamma = std::isnan(src.gamma) ? 0.95 : src.gamma;
            cfg.demand_max = src.demand_max;
            cfg.seed = seed;
            return inventory_generate(cfg);
        }
        throw UsageError("unknown generator '" + domain + "' (expected garnet or inventory)");
    }();
    const std::string kind = !src.kind.empty() ? src.kind : (domain == "garnet" ? "sa_rect_l1" : "singleton");
    AmbiguitySpec spec = make_spec(kind, inst.nominal, src);
    RmdpFile file{std::move(inst.mdp), std::move(inst.nominal), std::move(spec), std::nullopt};
    if (domain == "inventory" || src.parametric) {
        FeatureMap features = inst.features ? *inst.features : default_radial_features(file.mdp.states());
        XiSet set = default_xi_set(file.mdp.states(), file.mdp.actions(), features.dim());
        file.parametric = ParametricBlock{std::move(features), std::move(set)};
    }
    return file;
}

std::vector<RmdpFile> load_sources(const SourceOptions& src, const GlobalOptions& g) {
    if (src.seeds < 1) {
        throw UsageError("--seeds must be at least 1");
    }
    if (src.instance.empty() == src.generate.empty()) {
        throw UsageError("give exactly one of --instance FILE or --generate garnet|inventory");
    }
    if (!src.instance.empty()) {
        if (src.seeds != 1) {
            throw UsageError("--seeds applies only to generated instances");
        }
        std::vector<RmdpFile> out;
        out.push_back(load_rmdp(src.instance));
        report_warnings(out.back(), g);
        return out;
    }
    std::vector<RmdpFile> out;
    for (std::size_t k = 0; k < src.seeds; ++k) {
        out.push_back(generate_instance(src.generate, src, g.seed + k));
        if (k == 0) {
            report_warnings(out.back(), g);
        }
    }
    return out;
}

void add_generator_options(CLI::App* cmd, SourceOptions& src) {
    cmd->add_option("--states", src.states, "number of states (garnet 10, inventory 8)");
    cmd->add_option("--actions", src.actions, "number of actions (default 3)");
    cmd->add_option("--branch", src.branch, "garnet branching factor")->capture_default_str();
    cmd->add_option("--gamma", src.gamma, "discount (garnet 0.9, inventory 0.95)");
    cmd->add_option("--demand-max", src.demand_max, "largest inventory demand")->capture_default_str();
    cmd->add_option("--kind", src.kind,
                    "ambiguity kind: singleton, sa_rect_l1, sa_rect_linf, s_rect_l1, s_rect_linf, "
                    "r_contamination");
    cmd->add_option("--kappa", src.kappa, "budget of rectangular sets")->capture_default_str();
    cmd->add_option("--r", src.r, "contamination level")->capture_default_str();
    cmd->add_flag("--state-action-costs", src.state_action_costs, "garnet costs independent of s'");
    cmd->add_flag("--parametric", src.parametric, "attach radial features and the default xi set");
}

void add_source_options(CLI::App* cmd, SourceOptions& src) {
    cmd->add_option("--instance", src.instance, "instance file");
    cmd->add_option("--generate", src.generate, "generate the instance instead: garnet or inventory");
    cmd->add_option("--seeds", src.seeds, "generated instances, seeds --seed .. --seed+N-1")
        ->capture_default_str();
    add_generator_options(cmd, src);
}

void add_solver_options(CLI::App* cmd, SolverOptions& so, bool allow_auto = false) {
    cmd->add_option("--iterations", so.iterations, "outer iterations T")->capture_default_str();
    cmd->add_option("--alpha", so.alpha, "fixed policy step size (default delta / sqrt(T))");
    cmd->add_option("--delta", so.delta, "delta in alpha = delta / sqrt(T)")->capture_default_str();
    cmd->add_option("--eps0", so.eps0, "initial inner tolerance")->capture_default_str();
    cmd->add_option("--eps-decay", so.eps_decay, "tolerance factor per iteration (default gamma)");
    if (allow_auto) {
        so.inner = "auto";
        cmd->add_option("--inner", so.inner, "inner solver: vi, pgd, param, or auto (param when the instance has a parametric block)")
            ->check(CLI::IsMember({"auto", "vi", "pgd", "param"}))
            ->capture_default_str();
    } else {
        cmd->add_option("--inner", so.inner, "inner solver: vi, pgd or param")
            ->check(CLI::IsMember({"vi", "pgd", "param"}))
            ->capture_default_str();
    }
    cmd->add_option("--inner-iters", so.inner_iters, "inner gradient iterations")->capture_default_str();
    cmd->add_option("--inner-step", so.inner_step, "inner step size (0 selects the default)")
        ->capture_default_str();
}

// -- solver configuration ----------------------------------------------------------

DrpgConfig make_config(const SolverOptions& so, const RmdpFile& file) {
    DrpgConfig cfg;
    cfg.iterations = so.iterations;
    if (std::isnan(so.alpha)) {
        cfg.step = ConstantDeltaOverSqrtT{so.delta};
    } else {
        cfg.step = FixedStep{so.alpha};
    }
    cfg.eps0 = so.eps0;
    if (!std::isnan(so.eps_decay)) {
        cfg.eps_decay = so.eps_decay;
    }
    cfg.record_wall_clock = !so.no_wall_clock;
    InnerPgdConfig icfg;
    icfg.max_iter = so.inner_iters;
    icfg.beta = so.inner_step;
    if (so.inner == "pgd") {
        cfg.inner = PgdInner{icfg};
    } else if (so.inner == "param") {
        if (!file.parametric) {
            throw ConfigError("--inner param needs an instance with a parametric block");
        }
        cfg.inner = ParamInner{icfg, file.parametric->set, file.parametric->features};
    } else {
        cfg.inner = ExactVi{};
    }
    return cfg;
}

/// The set the outer loop runs against: parametric runs keep only the nominal kernel.
AmbiguitySpec run_spec(const SolverOptions& so, const RmdpFile& file) {
    return so.inner == "param" ? AmbiguitySpec::singleton(file.nominal) : file.ambiguity;
}

std::optional<double> robust_optimum(const SolverOptions& so, const RmdpFile& file) {
    if (so.inner == "param" || is_s_rectangular(file.ambiguity.kind())) {
        return std::nullopt;
    }
    return robust_optimal_value_iteration(file.mdp, file.ambiguity, 1e-10).j_star;
}

Policy load_policy(const std::string& path, std::size_t S, std::size_t A) {
    if (path.empty()) {
        return Policy::uniform(S, A);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open policy file '" + path + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput("policy file is not valid JSON: " + std::string(e.what()));
    }
    const json& m = doc.is_object() && doc.contains("pi_best") ? doc.at("pi_best") : doc;
    Policy pi(matrix_from_json(m, "policy"));
    if (pi.states() != S || pi.actions() != A) {
        throw InvalidInput("policy shape does not match the instance");
    }
    return pi;
}

// -- commands ---------------------------------------------------------------------

int cmd_generate(const std::string& domain, const SourceOptions& src, const GlobalOptions& g,
                 std::ostream& out) {
    const RmdpFile file = generate_instance(domain, src, g.seed);
    report_warnings(file, g);
    Sink sink(g.output, out);
    *sink << dump_rmdp(file);
    return kExitOk;
}

struct SeedRun {
    std::vector<TraceRecord> records;
    Policy pi_best;
    double j_best = 0.0;
    std::optional<double> j_star;
};

int solve_single(const RmdpFile& file, const SolverOptions& so, const GlobalOptions& g,
                 std::ostream& out) {
    const DrpgConfig cfg = make_config(so, file);
    const AmbiguitySpec spec = run_spec(so, file);
    const Policy pi0 = Policy::uniform(file.mdp.states(), file.mdp.actions());
    const std::optional<double> j_star = robust_optimum(so, file);

    Sink sink(g.output, out);
    DrpgResult result;
    json trace = json::array();
    if (g.format == "csv") {
        TraceCsvWriter writer(*sink);
        result = drpg_run(file.mdp, spec, pi0, cfg,
                          [&](const TraceRecord& r, const Policy&, const TransitionKernel&) { writer.write(r); });
    } else {
        result = drpg_run(file.mdp, spec, pi0, cfg);
        for (const TraceRecord& r : result.trace.records) {
            trace.push_back(record_to_json(r));
        }
    }

    json summary;
    summary["pi_best"] = matrix_to_json(result.pi_best.probs());
    summary["j_best"] = number_or_null(result.j_best);
    summary["j_star"] = j_star ? json(*j_star) : json(nullptr);
    summary["final_error"] =
        j_star && std::isfinite(result.j_best) ? json(std::abs(result.j_best - *j_star)) : json(nullptr);
    if (g.format == "json") {
        json doc;
        doc["summary"] = summary;
        doc["trace"] = std::move(trace);
        *sink << doc.dump(2) << '\n';
    }
    if (!so.summary.empty()) {
        write_json(so.summary, summary);
    }
    return kExitOk;
}

int solve_multi(const std::vector<RmdpFile>& files, const SolverOptions& so, const GlobalOptions& g,
                std::ostream& out) {
    const std::vector<SeedRun> runs = parallel_map<SeedRun>(files.size(), g.threads, [&](std::size_t i) {
        const RmdpFile& file = files[i];
        const DrpgResult r = drpg_run(file.mdp, run_spec(so, file),
                                      Policy::uniform(file.mdp.states(), file.mdp.actions()),
                                      make_config(so, file));
        return SeedRun{r.trace.records, r.pi_best, r.j_best, robust_optimum(so, file)};
    });
    const bool have_oracle = std::all_of(runs.begin(), runs.end(), [](const SeedRun& r) { return r.j_star.has_value(); });

    // per-iteration error |J(pi_t, p_t) - J*| across seeds, or the objective without an oracle
    Sink sink(g.output, out);
    json envelope = json::array();
    if (g.format == "csv") {
        *sink << (have_oracle ? "iter,p05_error,median_error,p95_error\n" : "iter,p05_objective,median_objective,p95_objective\n");
    }
    for (std::size_t t = 0; t < so.iterations; ++t) {
        std::vector<double> values;
        for (const SeedRun& r : runs) {
            const double j = r.records[t].objective;
            values.push_back(have_oracle ? std::abs(j - *r.j_star) : j);
        }
        const double lo = percentile(values, 0.05);
        const double mid = percentile(values, 0.5);
        const double hi = percentile(values, 0.95);
        if (g.format == "csv") {
            *sink << t << ',' << format_number(lo) << ',' << format_number(mid) << ',' << format_number(hi) << '\n';
            (*sink).flush();
        } else {
            envelope.push_back({{"iter", t}, {"p05", lo}, {"median", mid}, {"p95", hi}});
        }
    }

    json seeds = json::array();
    std::size_t within = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const SeedRun& r = runs[i];
        json s;
        s["seed"] = g.seed + i;
        s["j_best"] = number_or_null(r.j_best);
        s["j_star"] = r.j_star ? json(*r.j_star) : json(nullptr);
        if (r.j_star && !r.records.empty()) {
            const double err = std::abs(r.records.back().objective - *r.j_star);
            s["final_error"] = err;
            if (err <= 1e-2 * *r.j_star) {
                ++within;
            }
        } else {
            s["final_error"] = nullptr;
        }
        seeds.push_back(std::move(s));
    }
    json summary;
    summary["seeds"] = std::move(seeds);
    summary["fraction_within_1pct"] =
        have_oracle && so.iterations > 0 ? json(static_cast<double>(within) / static_cast<double>(runs.size()))
                                         : json(nullptr);
    if (g.format == "json") {
        *sink << json{{"envelope", envelope}, {"summary", summary}}.dump(2) << '\n';
    }
    if (!so.summary.empty()) {
        write_json(so.summary, summary);
    }
    return kExitOk;
}

int cmd_solve(const SourceOptions& src, const SolverOptions& so, const GlobalOptions& g, std::ostream& out) {
    const std::vector<RmdpFile> files = load_sources(src, g);
    if (files.size() == 1) {
        return solve_single(files.front(), so, g, out);
    }
    return solve_multi(files, so, g, out);
}

struct EvaluateOptions {
    std::string policy;
    double tol = 1e-8;
    double eps = 1e-2;
    double delta = 1.0;
    std::size_t param_iters = 2000;
};

int cmd_evaluate(const SourceOptions& src, const EvaluateOptions& eo, const GlobalOptions& g,
                 std::ostream& out) {
    const std::vector<RmdpFile> files = load_sources(src, g);
    if (files.size() != 1) {
        throw UsageError("evaluate takes a single instance");
    }
    const RmdpFile& file = files.front();
    const TabularMdp& mdp = file.mdp;
    const Policy pi = load_policy(eo.policy, mdp.states(), mdp.actions());

    json doc;
    doc["nominal_return"] = return_value(mdp, pi, file.nominal);
    doc["ambiguity"] = std::string(to_string(file.ambiguity.kind()));
    const RobustEvalResult robust = robust_policy_evaluate(mdp, pi, file.ambiguity, eo.tol);
    doc["robust_value"] = robust.phi;
    doc["robust_iterations"] = robust.iterations;
    if (!is_s_rectangular(file.ambiguity.kind())) {
        doc["j_star"] = robust_optimal_value_iteration(mdp, file.ambiguity, eo.tol).j_star;
    }
    if (file.parametric) {
        InnerPgdConfig icfg;
        icfg.max_iter = eo.param_iters;
        const ParamRobustValue pv = evaluate_robustly(
            mdp, pi, file.nominal, ParamInner{icfg, file.parametric->set, file.parametric->features});
        doc["parametric_value_lower_bound"] = pv.value;
    }
    const SmoothnessConstants k = smoothness_constants(mdp, file.nominal);
    doc["l_pi"] = k.l_pi;
    doc["ell_pi"] = k.ell_pi;
    doc["l_p"] = k.l_p;
    doc["ell_p"] = k.ell_p;
    doc["d_hat"] = k.d_hat ? json(*k.d_hat) : json(nullptr);
    if (k.d_hat) {
        doc["outer_iteration_bound"] = outer_iteration_bound(mdp, *k.d_hat, eo.delta, eo.eps);
        doc["inner_iteration_bound"] = inner_iteration_bound(mdp, *k.d_hat, eo.eps);
    }

    Sink sink(g.output, out);
    if (g.format == "json") {
        *sink << doc.dump(2) << '\n';
    } else {
        *sink << "key,value\n";
        for (const auto& [key, value] : doc.items()) {
            *sink << key << ',' << (value.is_number() ? format_number(value.get<double>()) : value.is_null() ? "" : value.get<std::string>()) << '\n';
        }
    }
    return kExitOk;
}

struct InnerOptions {
    std::string policy;
    std::string method = "pgd";
    std::size_t iterations = 5000;
    double step = 0.0;
    double grad_map_tol = 1e-10;
    std::string summary;
};

int cmd_inner(const SourceOptions& src, const InnerOptions& io, const GlobalOptions& g, std::ostream& out) {
    const std::vector<RmdpFile> files = load_sources(src, g);
    if (files.size() != 1) {
        throw UsageError("inner takes a single instance");
    }
    const RmdpFile& file = files.front();
    const TabularMdp& mdp = file.mdp;
    const Policy pi = load_policy(io.policy, mdp.states(), mdp.actions());
    InnerPgdConfig cfg;
    cfg.max_iter = io.iterations;
    cfg.beta = io.step;
    cfg.grad_map_tol = io.grad_map_tol;

    std::vector<double> trace;
    json summary;
    if (io.method == "param") {
        if (!file.parametric) {
            throw ConfigError("--method param needs an instance with a parametric block");
        }
        const ParamInnerResult r = inner_pgd_param(mdp, pi, file.parametric->set.center, file.parametric->set,
                                                   file.nominal, file.parametric->features, cfg);
        trace = r.trace;
        summary["j_best"] = r.j_best;
        summary["iterations"] = r.iterations;
        summary["theta_best"] = std::vector<double>(r.xi_best.theta.data(), r.xi_best.theta.data() + r.xi_best.theta.size());
        summary["lambda_best"] = matrix_to_json(r.xi_best.lam);
    } else {
        const InnerResult r = inner_pgd(mdp, pi, file.ambiguity, file.nominal, cfg);
        trace = r.trace;
        const double phi = robust_policy_evaluate(mdp, pi, file.ambiguity, 1e-10).phi;
        summary["j_best"] = r.j_best;
        summary["iterations"] = r.iterations;
        summary["grad_map_norm"] = r.grad_map_norm;
        summary["phi_oracle"] = phi;
        summary["gap"] = phi - r.j_best;
    }
    Sink sink(g.output, out);
    if (g.format == "json") {
        *sink << json{{"trace", trace}, {"summary", summary}}.dump(2) << '\n';
    } else {
        *sink << "iter,objective\n";
        for (std::size_t t = 0; t < trace.size(); ++t) {
            *sink << t << ',' << format_number(trace[t]) << '\n';
        }
    }
    if (!io.summary.empty()) {
        write_json(io.summary, summary);
    }
    return kExitOk;
}

int cmd_gradcheck(const SourceOptions& src, GradcheckOptions opts, const GlobalOptions& g, std::ostream& out,
                  std::ostream& err) {
    const std::vector<RmdpFile> files = load_sources(src, g);
    opts.seed = g.seed;
    bool pass = true;
    Sink sink(g.output, out);
    json doc = json::array();
    if (g.format == "csv") {
        *sink << "instance,family,checks,max_rel_error,worst\n";
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        for (const FamilyReport& rep : gradcheck(files[i], opts)) {
            const bool ok = rep.max_rel_error <= opts.tol;
            pass = pass && ok;
            if (!ok) {
                err << "gradient check failed: " << rep.family << " at " << rep.worst << " (relative error "
                    << format_number(rep.max_rel_error) << ")\n";
            }
            if (g.format == "csv") {
                *sink << i << ',' << rep.family << ',' << rep.checks << ',' << format_number(rep.max_rel_error)
                      << ',' << rep.worst << '\n';
            } else {
                doc.push_back({{"instance", i}, {"family", rep.family}, {"checks", rep.checks},
                               {"max_rel_error", rep.max_rel_error}, {"worst", rep.worst}, {"pass", ok}});
            }
        }
    }
    if (g.format == "json") {
        *sink << doc.dump(2) << '\n';
    }
    return pass ? kExitOk : kExitNumerical;
}

struct CompareOptions {
    double alpha_nominal = kUnset;
    std::size_t eval_iters = 500;
    double tol = 1e-8;
};

int cmd_compare(const SourceOptions& src, SolverOptions so, const CompareOptions& co, const GlobalOptions& g,
                std::ostream& out) {
    const std::vector<RmdpFile> files = load_sources(src, g);
    if (so.inner == "auto") {
        so.inner = files.front().parametric ? "param" : "vi";
    }
    const bool param = so.inner == "param";
    using Curves = std::pair<std::vector<double>, std::vector<double>>;
    const std::vector<Curves> curves = parallel_map<Curves>(files.size(), g.threads, [&](std::size_t i) {
        const RmdpFile& file = files[i];
        const Policy pi0 = Policy::uniform(file.mdp.states(), file.mdp.actions());
        DrpgConfig cfg = make_config(so, file);
        cfg.record_wall_clock = false;
        std::optional<ParamInner> evaluator;
        if (param) {
            InnerPgdConfig icfg;
            icfg.max_iter = co.eval_iters;
            evaluator = ParamInner{icfg, file.parametric->set, file.parametric->features};
        }
        auto phi = [&](const Policy& pi) {
            return evaluator ? evaluate_robustly(file.mdp, pi, file.nominal, *evaluator).value
                             : evaluate_robustly(file.mdp, pi, file.ambiguity, co.tol);
        };
        Curves c;
        drpg_run(file.mdp, run_spec(so, file), pi0, cfg,
                 [&](const TraceRecord&, const Policy& pi, const TransitionKernel&) { c.first.push_back(phi(pi)); });
        DrpgConfig nominal_cfg = cfg;
        if (!std::isnan(co.alpha_nominal)) {
            nominal_cfg.step = FixedStep{co.alpha_nominal};
        }
        nominal_pg_run(file.mdp, file.nominal, pi0, nominal_cfg,
                       [&](const TraceRecord&, const Policy& pi, const TransitionKernel&) { c.second.push_back(phi(pi)); });
        return c;
    });

    Sink sink(g.output, out);
    json rows = json::array();
    if (g.format == "csv") {
        *sink << "iter,phi_drpg,phi_nominal\n";
    }
    for (std::size_t t = 0; t < so.iterations; ++t) {
        std::vector<double> a;
        std::vector<double> b;
        for (const Curves& c : curves) {
            a.push_back(c.first[t]);
            b.push_back(c.second[t]);
        }
        const double pa = percentile(a, 0.5);
        const double pb = percentile(b, 0.5);
        if (g.format == "csv") {
            *sink << t << ',' << format_number(pa) << ',' << format_number(pb) << '\n';
        } else {
            rows.push_back({{"iter", t}, {"phi_drpg", pa}, {"phi_nominal", pb}});
        }
    }
    if (g.format == "json") {
        *sink << rows.dump(2) << '\n';
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust MDP toolkit: double-loop robust policy gradient on tabular models", "drpg"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    g.warnings = &err;
    app.add_option("--seed", g.seed, "seed for generators and randomized checks")->capture_default_str();
    app.add_option("-o,--output", g.output, "output path (stdout when omitted)");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads for multi-seed runs")->check(CLI::PositiveNumber)->capture_default_str();

    std::string domain;
    SourceOptions gen_src;
    CLI::App* generate = app.add_subcommand("generate", "write a generated instance file");
    generate->add_option("domain", domain, "garnet or inventory")->required()->check(CLI::IsMember({"garnet", "inventory"}));
    add_generator_options(generate, gen_src);

    SourceOptions solve_src;
    SolverOptions solve_opts;
    CLI::App* solve = app.add_subcommand("solve", "run DRPG and write its trace");
    add_source_options(solve, solve_src);
    add_solver_options(solve, solve_opts);
    solve->add_flag("--no-wall-clock", solve_opts.no_wall_clock, "record wall_ms as 0 for reproducible traces");
    solve->add_option("--summary", solve_opts.summary, "summary JSON path");

    SourceOptions eval_src;
    EvaluateOptions eval_opts;
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "robust value, constants and iteration bounds of a policy");
    add_source_options(evaluate_cmd, eval_src);
    evaluate_cmd->add_option("--policy", eval_opts.policy, "policy JSON (S x A rows, or a solve summary)");
    evaluate_cmd->add_option("--tol", eval_opts.tol, "robust evaluation tolerance")->capture_default_str();
    evaluate_cmd->add_option("--eps", eval_opts.eps, "target accuracy for the iteration bounds")->capture_default_str();
    evaluate_cmd->add_option("--delta", eval_opts.delta, "delta for the outer bound")->capture_default_str();
    evaluate_cmd->add_option("--param-iters", eval_opts.param_iters, "ascent steps for the parametric value")->capture_default_str();

    SourceOptions inner_src;
    InnerOptions inner_opts;
    CLI::App* inner = app.add_subcommand("inner", "solve the inner problem for a fixed policy by gradient ascent");
    add_source_options(inner, inner_src);
    inner->add_option("--policy", inner_opts.policy, "policy JSON (default uniform)");
    inner->add_option("--method", inner_opts.method, "pgd or param")->check(CLI::IsMember({"pgd", "param"}))->capture_default_str();
    inner->add_option("--iterations", inner_opts.iterations, "ascent steps")->capture_default_str();
    inner->add_option("--step", inner_opts.step, "step size (0 selects the default)")->capture_default_str();
    inner->add_option("--grad-map-tol", inner_opts.grad_map_tol, "stop when the gradient mapping is this small")->capture_default_str();
    inner->add_option("--summary", inner_opts.summary, "summary JSON path");

    SourceOptions check_src;
    GradcheckOptions check_opts;
    CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
    add_source_options(gradcheck_cmd, check_src);
    gradcheck_cmd->add_option("--trials", check_opts.trials, "random points per instance")->capture_default_str();
    gradcheck_cmd->add_option("--fd-step", check_opts.h, "finite-difference step")->capture_default_str();
    gradcheck_cmd->add_option("--tol", check_opts.tol, "relative error tolerance")->capture_default_str();
    gradcheck_cmd->add_flag("--corrupt", check_opts.corrupt, "perturb the analytic gradients (negative control)");

    SourceOptions cmp_src;
    SolverOptions cmp_opts;
    CompareOptions cmp_extra;
    CLI::App* compare = app.add_subcommand("compare", "worst-case curves of DRPG and non-robust policy gradient");
    add_source_options(compare, cmp_src);
    add_solver_options(compare, cmp_opts, true);
    compare->add_option("--alpha-nominal", cmp_extra.alpha_nominal, "step size of the non-robust run (default --alpha)");
    compare->add_option("--eval-iters", cmp_extra.eval_iters, "ascent steps per parametric evaluation")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(domain, gen_src, g, out);
        }
        if (solve->parsed()) {
            return cmd_solve(solve_src, solve_opts, g, out);
        }
        if (evaluate_cmd->parsed()) {
            return cmd_evaluate(eval_src, eval_opts, g, out);
        }
        if (inner->parsed()) {
            return cmd_inner(inner_src, inner_opts, g, out);
        }
        if (gradcheck_cmd->parsed()) {
            return cmd_gradcheck(check_src, check_opts, g, out, err);
        }
        if (compare->parsed()) {
            return cmd_compare(cmp_src, cmp_opts, cmp_extra, g, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const LpInfeasible& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const LpUnbounded& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitUsage;
}

} // namespace drpg::cli

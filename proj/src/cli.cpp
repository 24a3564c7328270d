#include "ivdtr/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ivdtr/crossfit.hpp"
#include "ivdtr/improve.hpp"
#include "ivdtr/policy_json.hpp"
#include "ivdtr/sim.hpp"

namespace ivdtr {

namespace fs = std::filesystem;

std::vector<std::string> history_feature_names(const std::vector<int>& covariate_dims, int stage) {
    std::vector<std::string> names;
    for (int t = 0; t <= stage; ++t) {
        const std::string ts = std::to_string(t + 1);
        for (int j = 1; j <= covariate_dims.at(static_cast<std::size_t>(t)); ++j) {
            names.push_back("x" + ts + "_" + std::to_string(j));
        }
        if (t < stage) {
            names.push_back("a" + ts);
            names.push_back("r" + ts);
        }
    }
    return names;
}

namespace {

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

std::string describe_node(const TreeRule& tree, int idx, const std::vector<std::string>& names) {
    const auto& n = tree.nodes.at(static_cast<std::size_t>(idx));
    if (n.is_leaf()) return n.label > 0 ? "(+1)" : "(-1)";
    const std::string f = static_cast<std::size_t>(n.feature) < names.size()
                              ? names[static_cast<std::size_t>(n.feature)]
                              : "h[" + std::to_string(n.feature) + "]";
    return f + " < " + format_double(n.threshold) + " ? " + describe_node(tree, n.left, names) +
           " : " + describe_node(tree, n.right, names);
}

}  // namespace

std::string describe_tree(const TreeRule& tree, const std::vector<std::string>& names) {
    if (tree.nodes.empty()) return "(empty)";
    return describe_node(tree, 0, names);
}

namespace {

// ---- config handling -------------------------------------------------------

const std::set<std::string> kFitKeys = {"data", "reward_bounds", "lambda", "depth", "crossfit",
                                        "seed", "out", "threads", "clip", "strict",
                                        "min_leaf_fraction"};
const std::set<std::string> kImproveKeys = {"data", "reward_bounds", "baseline", "depth",
                                            "crossfit", "seed", "out", "threads", "clip",
                                            "strict", "min_leaf_fraction"};
const std::set<std::string> kSimulateKeys = {"c1", "xi", "n_train", "seed", "depth",
                                             "replications", "n_eval", "stage1_signal_threshold",
                                             "crossfit", "clip", "out", "threads"};
const std::set<std::string> kEvaluateKeys = {"policy", "c1", "xi", "n_eval", "seed",
                                             "stage1_signal_threshold", "out", "threads"};

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed config JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("malformed config JSON: expected an object");
    return j;
}

void check_keys(const Json& cfg, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : cfg.items()) {
        if (!allowed.count(key)) throw Error("unknown config key '" + key + "'");
    }
}

double get_number(const Json& c, const std::string& key, double def) {
    if (!c.contains(key)) return def;
    if (!c.at(key).is_number()) throw Error("config key '" + key + "' must be a number");
    return c.at(key).get<double>();
}

long long get_int(const Json& c, const std::string& key, long long def) {
    if (!c.contains(key)) return def;
    const auto& v = c.at(key);
    if (!v.is_number_integer()) throw Error("config key '" + key + "' must be an integer");
    return v.get<long long>();
}

std::uint64_t get_seed(const Json& c, std::uint64_t def) {
    if (!c.contains("seed")) return def;
    const auto& v = c.at("seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw Error("config key 'seed' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string get_string(const Json& c, const std::string& key, const std::string& def) {
    if (!c.contains(key)) return def;
    if (!c.at(key).is_string()) throw Error("config key '" + key + "' must be a string");
    return c.at(key).get<std::string>();
}

bool get_bool(const Json& c, const std::string& key, bool def) {
    if (!c.contains(key)) return def;
    if (!c.at(key).is_boolean()) throw Error("config key '" + key + "' must be a boolean");
    return c.at(key).get<bool>();
}

std::vector<double> get_number_list(const Json& c, const std::string& key, double def) {
    if (!c.contains(key)) return {def};
    const auto& v = c.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array() && !v.empty() &&
        std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); })) {
        return v.get<std::vector<double>>();
    }
    throw Error("config key '" + key + "' must be a number or a non-empty list of numbers");
}

int checked_int(long long v, const std::string& key, long long lo) {
    if (v < lo || v > 1'000'000'000LL) {
        throw Error("config key '" + key + "' must be >= " + std::to_string(lo));
    }
    return static_cast<int>(v);
}

RewardBounds reward_bounds_from(const Json& c, int stages) {
    if (!c.contains("reward_bounds")) {
        return RewardBounds(std::vector<Interval>(static_cast<std::size_t>(stages), {0.0, 1.0}));
    }
    const auto& v = c.at("reward_bounds");
    if (!v.is_array()) throw Error("reward_bounds must be a list of [lower, upper] pairs");
    std::vector<Interval> iv;
    for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
            throw Error("reward_bounds must be a list of [lower, upper] pairs");
        }
        iv.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    if (static_cast<int>(iv.size()) != stages) {
        throw Error("reward_bounds has " + std::to_string(iv.size()) +
                    " stages but the data has " + std::to_string(stages));
    }
    return RewardBounds(std::move(iv));
}

WeightSpec lambda_from(const Json& c, int stages) {
    if (!c.contains("lambda")) return parse_weight_spec("m", stages);
    const auto& v = c.at("lambda");
    if (v.is_string()) return parse_weight_spec(v.get<std::string>(), stages);
    if (v.is_number()) {
        const double x = v.get<double>();
        require(x >= 0.0 && x <= 1.0, "lambda out of range");
        return WeightSpec::constant(std::vector<double>(static_cast<std::size_t>(stages), x));
    }
    if (v.is_array()) {
        std::vector<double> vals;
        for (const auto& e : v) {
            if (!e.is_number()) throw Error("config key 'lambda' must hold numbers");
            vals.push_back(e.get<double>());
        }
        require(static_cast<int>(vals.size()) == stages,
                "lambda has " + std::to_string(vals.size()) + " entries but the data has " +
                    std::to_string(stages) + " stages");
        return WeightSpec::constant(vals);
    }
    throw Error("config key 'lambda' must be a string, number or list");
}

void apply_threads(const Json& c) {
    const int threads = checked_int(get_int(c, "threads", 0), "threads", 0);
    if (threads > 0) omp_set_num_threads(threads);
}

fs::path prepare_out(const std::string& out) {
    if (out.empty()) return {};
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error("cannot create output directory '" + out + "': " + ec.message());
    return fs::path(out);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
}

// ---- diagnostics -----------------------------------------------------------

int nonconverged(const LogisticModel& m) { return m.info.converged ? 0 : 1; }

int nonconverged(const PropensityModels& p) {
    int c = nonconverged(p.pz);
    for (int z = 0; z < 2; ++z) {
        if (!p.empty_arm[static_cast<std::size_t>(z)]) c += nonconverged(p.pa_given_z[static_cast<std::size_t>(z)]);
    }
    return c;
}

int nonconverged(const OutcomeModels& o) {
    int c = 0;
    for (const auto& m : o.mu) {
        if (m.kind == OutcomeModel::Kind::logistic) c += nonconverged(m.logistic);
    }
    return c;
}

Json width_quantiles(const StageIntervals& iv) {
    std::vector<double> w;
    w.reserve(iv.plus.size() * 2);
    for (const auto& i : iv.plus) w.push_back(i.width());
    for (const auto& i : iv.minus) w.push_back(i.width());
    return {{"min", quantile(w, 0.0)},
            {"q25", quantile(w, 0.25)},
            {"median", quantile(w, 0.5)},
            {"q75", quantile(w, 0.75)},
            {"max", quantile(w, 1.0)}};
}

Json tree_report(const PolicyStage& stage, const std::vector<std::string>& names) {
    if (const auto* t = std::get_if<TreeRule>(&stage.rule)) {
        return {{"type", "tree"},
                {"depth", t->depth()},
                {"nodes", t->nodes.size()},
                {"description", describe_tree(*t, names)}};
    }
    if (const auto* c = std::get_if<ConstantRule>(&stage.rule)) {
        return {{"type", "constant"}, {"description", c->action > 0 ? "(+1)" : "(-1)"}};
    }
    return {{"type", stage.type_name()}};
}

void enforce_strict(bool strict, int total_nonconverged) {
    if (strict && total_nonconverged > 0) {
        throw Error(ErrorKind::numerical,
                    std::to_string(total_nonconverged) +
                        " logistic fit(s) did not converge within the iteration limit");
    }
}

struct DataJob {
    Dataset data;
    RewardBounds bounds;
    ProjectionOptions projection;
    StageFitOptions fit;
    CrossfitOptions crossfit;
    bool strict = false;
    fs::path out;
};

DataJob data_job(const Json& c) {
    const std::string path = get_string(c, "data", "");
    require(!path.empty(), "missing data path (--data or config key 'data')");
    Dataset data = load_csv(path);
    const int K = data.num_stages();
    RewardBounds bounds = reward_bounds_from(c, K);
    DataJob job{std::move(data), std::move(bounds), {}, {}, {}, false, {}};
    job.projection.depth = checked_int(get_int(c, "depth", 2), "depth", 0);
    job.projection.min_leaf_fraction = get_number(c, "min_leaf_fraction", 0.01);
    require(job.projection.min_leaf_fraction >= 0.0 && job.projection.min_leaf_fraction < 0.5,
            "min_leaf_fraction must lie in [0, 0.5)");
    job.fit.clip = get_number(c, "clip", kDefaultClip);
    require(job.fit.clip > 0.0 && job.fit.clip < 0.5, "probability clip must lie in (0, 0.5)");
    job.crossfit.num_batches = checked_int(get_int(c, "crossfit", 2), "crossfit", 0);
    job.crossfit.seed = get_seed(c, 1);
    job.strict = get_bool(c, "strict", false);
    return job;
}

// ---- commands --------------------------------------------------------------

Json cmd_fit(const Json& c, std::ostream& out) {
    check_keys(c, kFitKeys);
    apply_threads(c);
    DataJob job = data_job(c);
    const int K = job.data.num_stages();
    const WeightSpec lambda = lambda_from(c, K);
    const auto dest = prepare_out(get_string(c, "out", ""));

    const CrossfitResult res = fit_ivoptimal_crossfit(job.data, job.bounds, lambda, job.projection,
                                                      job.crossfit, job.fit);
    Json stages = Json::array();
    int total_nc = 0;
    for (int k = 0; k < K; ++k) {
        const auto& st = res.full_sample.stages[static_cast<std::size_t>(k)];
        const int nc = nonconverged(st.nuisance.propensity) + nonconverged(st.nuisance.outcome);
        total_nc += nc;
        const auto names = history_feature_names(job.data.schema().covariate_dims, k);
        stages.push_back({{"stage", k + 1},
                          {"lambda", st.lambda},
                          {"interval_width", width_quantiles(st.intervals)},
                          {"empty_cells", st.nuisance.outcome.empty_cells()},
                          {"empty_instrument_arms", static_cast<int>(st.nuisance.propensity.empty_arm[0]) +
                                                        static_cast<int>(st.nuisance.propensity.empty_arm[1])},
                          {"interval_repairs", st.intervals.repairs},
                          {"nonconverged_fits", nc},
                          {"tree", tree_report(res.policy.stages[static_cast<std::size_t>(k)], names)}});
    }
    enforce_strict(job.strict, total_nc);

    Json report{{"command", "fit"},
                {"n", job.data.size()},
                {"stages", K},
                {"lambda", lambda.per_stage},
                {"depth", job.projection.depth},
                {"crossfit", job.crossfit.num_batches >= 2 ? job.crossfit.num_batches : 0},
                {"stage_reports", stages}};
    if (!dest.empty()) {
        save_policy(res.policy, (dest / "policy.json").string());
        write_text(dest / "report.json", report.dump(2) + "\n");
        out << report.dump(2) << '\n';
    } else {
        out << Json{{"policy", policy_to_json(res.policy)}, {"report", report}}.dump(2) << '\n';
    }
    return report;
}

Dtr baseline_from(const std::string& spec, const DataJob& job) {
    const int K = job.data.num_stages();
    if (spec == "std") return constant_dtr(K, -1);
    if (spec == "prosp") return constant_dtr(K, 1);
    if (spec == "sra") return fit_sra_baseline(job.data, job.bounds, job.projection, job.fit.clip);
    return load_policy(spec);
}

Json cmd_improve(const Json& c, std::ostream& out) {
    check_keys(c, kImproveKeys);
    apply_threads(c);
    DataJob job = data_job(c);
    const int K = job.data.num_stages();
    const std::string baseline_spec = get_string(c, "baseline", "");
    require(!baseline_spec.empty(), "missing baseline (--baseline std|prosp|sra|<policy.json>)");
    const auto dest = prepare_out(get_string(c, "out", ""));
    const Dtr baseline = baseline_from(baseline_spec, job);

    ImproveOptions opt;
    opt.projection = job.projection;
    opt.fit = job.fit;
    opt.crossfit = job.crossfit;
    const ImproveResult res = fit_ivimproved(job.data, baseline, baseline_spec, job.bounds, opt);

    Json stages = Json::array();
    int total_nc = 0;
    for (int k = 0; k < K; ++k) {
        const auto& st = res.stages[static_cast<std::size_t>(k)];
        const auto& ev = st.evaluator;
        const int nc = nonconverged(ev.propensity) + nonconverged(ev.reward) +
                       nonconverged(ev.continuation) + nonconverged(ev.total);
        total_nc += nc;
        const Matrix h = job.data.histories(k);
        const auto names = history_feature_names(job.data.schema().covariate_dims, k);
        stages.push_back(
            {{"stage", k + 1},
             {"interval_width", width_quantiles(stage_intervals(ev.propensity, ev.total, h, ev.total.range))},
             {"empty_cells", st.empty_cells},
             {"empty_instrument_arms", static_cast<int>(ev.propensity.empty_arm[0]) +
                                           static_cast<int>(ev.propensity.empty_arm[1])},
             {"interval_repairs", st.repairs},
             {"nonconverged_fits", nc},
             {"deviation_fraction", st.deviation_fraction()},
             {"projected_deviation_fraction", res.projected_deviation[static_cast<std::size_t>(k)]},
             {"tree", tree_report(res.policy.stages[static_cast<std::size_t>(k)], names)}});
    }
    enforce_strict(job.strict, total_nc);

    Json report{{"command", "improve"},
                {"n", job.data.size()},
                {"stages", K},
                {"baseline", baseline_spec},
                {"depth", job.projection.depth},
                {"crossfit", job.crossfit.num_batches >= 2 ? job.crossfit.num_batches : 0},
                {"stage_reports", stages}};
    if (!dest.empty()) {
        save_policy(res.policy, (dest / "policy.json").string());
        write_text(dest / "report.json", report.dump(2) + "\n");
        out << report.dump(2) << '\n';
    } else {
        out << Json{{"policy", policy_to_json(res.policy)}, {"report", report}}.dump(2) << '\n';
    }
    return report;
}

SimConfig sim_base(const Json& c) {
    SimConfig cfg;
    cfg.n_train = static_cast<std::size_t>(checked_int(get_int(c, "n_train", 1000), "n_train", 1));
    cfg.seed = get_seed(c, 1);
    cfg.depth = checked_int(get_int(c, "depth", 2), "depth", 0);
    cfg.replications = checked_int(get_int(c, "replications", 100), "replications", 1);
    cfg.n_eval = static_cast<std::size_t>(checked_int(get_int(c, "n_eval", 100000), "n_eval", 1));
    cfg.stage1_signal_threshold = get_number(c, "stage1_signal_threshold", 1.0);
    cfg.crossfit = checked_int(get_int(c, "crossfit", 0), "crossfit", 0);
    cfg.clip = get_number(c, "clip", kDefaultClip);
    return cfg;
}

Json cmd_simulate(const Json& c, std::ostream& out) {
    check_keys(c, kSimulateKeys);
    apply_threads(c);
    const SimConfig base = sim_base(c);
    const auto c1s = get_number_list(c, "c1", 4.0);
    const auto xis = get_number_list(c, "xi", 1.0);
    std::vector<SimConfig> cells;
    for (double c1 : c1s) {
        for (double xi : xis) {
            SimConfig cfg = base;
            cfg.c1 = c1;
            cfg.xi = xi;
            cfg.validate();
            cells.push_back(cfg);
        }
    }
    const auto dest = prepare_out(get_string(c, "out", ""));
    Json summary = Json::object();
    for (const auto& cfg : cells) {
        const CellResult cell = run_cell(cfg);
        summary[cfg.label()] = cell_summary_json(cell);
        if (!dest.empty()) {
            std::ostringstream csv;
            write_cell_csv(cell, csv);
            write_text(dest / ("values_" + cfg.label() + ".csv"), csv.str());
        }
    }
    if (!dest.empty()) write_text(dest / "summary.json", summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return summary;
}

Json cmd_evaluate(const Json& c, std::ostream& out) {
    check_keys(c, kEvaluateKeys);
    apply_threads(c);
    const std::string spec = get_string(c, "policy", "");
    require(!spec.empty(), "missing policy (--policy std|prosp|<policy.json>)");
    SimConfig cfg;
    cfg.c1 = get_number(c, "c1", 4.0);
    cfg.xi = get_number(c, "xi", 1.0);
    cfg.n_eval = static_cast<std::size_t>(checked_int(get_int(c, "n_eval", 100000), "n_eval", 1));
    cfg.seed = get_seed(c, 1);
    cfg.stage1_signal_threshold = get_number(c, "stage1_signal_threshold", 1.0);
    cfg.validate();
    const Dtr policy = spec == "std"     ? constant_dtr(2, -1)
                       : spec == "prosp" ? constant_dtr(2, 1)
                                         : load_policy(spec);
    const auto dest = prepare_out(get_string(c, "out", ""));
    Rng rng(mix_seed(cfg.seed, 0));
    const EvalReport r = true_value(policy, cfg, cfg.n_eval, rng);
    Json report{{"command", "evaluate"},
                {"policy", spec},
                {"c1", cfg.c1},
                {"xi", cfg.xi},
                {"raw_value", r.raw_value},
                {"normalized_value", r.normalized_value},
                {"monte_carlo_se", r.monte_carlo_se},
                {"n_eval", r.n_eval}};
    if (!dest.empty()) write_text(dest / "evaluation.json", report.dump(2) + "\n");
    out << report.dump(2) << '\n';
    return report;
}

void write_error(std::ostream& err, const char* kind, const std::string& message, int code) {
    err << Json{{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}}.dump()
        << '\n';
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw Error("not a number: '" + item + "'");
        vals.push_back(v);
    }
    if (vals.empty()) throw Error("empty number list");
    return vals;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Instrumental-variable dynamic treatment regimes", "ivdtr"};
    app.require_subcommand(1);

    std::string config_path;
    Json flags = Json::object();

    auto str_flag = [&](CLI::App* cmd, const std::string& name, const std::string& key,
                        const std::string& help) {
        cmd->add_option_function<std::string>(
            name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };
    auto int_flag = [&](CLI::App* cmd, const std::string& name, const std::string& key,
                        const std::string& help) {
        cmd->add_option_function<long long>(
            name, [&flags, key](long long v) { flags[key] = v; }, help);
    };
    auto list_flag = [&](CLI::App* cmd, const std::string& name, const std::string& key,
                         const std::string& help) {
        cmd->add_option_function<std::string>(
            name,
            [&flags, key](const std::string& v) {
                const auto vals = parse_number_list(v);
                flags[key] = vals.size() == 1 ? Json(vals[0]) : Json(vals);
            },
            help);
    };
    auto seed_flag = [&](CLI::App* cmd) {
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&flags](std::uint64_t v) { flags["seed"] = v; }, "Random seed");
    };
    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config; flags override its keys");
        str_flag(cmd, "--out", "out", "Output directory");
        int_flag(cmd, "--threads", "threads", "Maximum worker threads (0: runtime default)");
        seed_flag(cmd);
    };
    auto data_flags = [&](CLI::App* cmd) {
        str_flag(cmd, "--data", "data", "Trajectory CSV");
        int_flag(cmd, "--depth", "depth", "Tree depth");
        int_flag(cmd, "--crossfit", "crossfit", "Cross-fitting batches (0 or 1 disables)");
        cmd->add_flag_function(
            "--strict", [&flags](std::int64_t) { flags["strict"] = true; },
            "Fail with exit 3 when a logistic fit does not converge");
    };

    auto* fit = app.add_subcommand("fit", "Fit an IV-optimal regime from trajectory data");
    common(fit);
    data_flags(fit);
    str_flag(fit, "--lambda", "lambda", "w|b|m or const:<stage>:<value>[,...]");

    auto* improve = app.add_subcommand("improve", "Fit an IV-improved regime over a baseline");
    common(improve);
    data_flags(improve);
    str_flag(improve, "--baseline", "baseline", "std|prosp|sra|<policy.json>");

    auto* simulate = app.add_subcommand("simulate", "Run simulation cells");
    common(simulate);
    list_flag(simulate, "--c1", "c1", "Instrument strength(s), comma separated");
    list_flag(simulate, "--xi", "xi", "Confounding level(s), comma separated");
    int_flag(simulate, "--n-train", "n_train", "Training trajectories per replication");
    int_flag(simulate, "--replications", "replications", "Replications per cell");
    int_flag(simulate, "--n-eval", "n_eval", "Monte Carlo draws for evaluation");
    int_flag(simulate, "--depth", "depth", "Tree depth");
    int_flag(simulate, "--crossfit", "crossfit", "Cross-fitting batches for the IV fits");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy on the simulation model");
    common(evaluate);
    str_flag(evaluate, "--policy", "policy", "std|prosp|<policy.json>");
    list_flag(evaluate, "--c1", "c1", "Instrument strength");
    list_flag(evaluate, "--xi", "xi", "Confounding level");
    int_flag(evaluate, "--n-eval", "n_eval", "Monte Carlo draws");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        write_error(err, "validation", e.what(), kExitValidation);
        return kExitValidation;
    } catch (const Error& e) {
        write_error(err, "validation", e.what(), kExitValidation);
        return kExitValidation;
    }

    try {
        Json cfg = config_path.empty() ? Json::object() : load_config(config_path);
        for (const auto& [key, value] : flags.items()) cfg[key] = value;
        if (fit->parsed()) cmd_fit(cfg, out);
        else if (improve->parsed()) cmd_improve(cfg, out);
        else if (simulate->parsed()) cmd_simulate(cfg, out);
        else cmd_evaluate(cfg, out);
    } catch (const Error& e) {
        const bool numerical = e.kind() == ErrorKind::numerical;
        const int code = numerical ? kExitNumerical : kExitValidation;
        write_error(err, numerical ? "numerical" : "validation", e.what(), code);
        return code;
    } catch (const nlohmann::json::exception& e) {
        write_error(err, "validation", e.what(), kExitValidation);
        return kExitValidation;
    } catch (const std::exception& e) {
        write_error(err, "internal", e.what(), 1);
        return 1;
    }
    return kExitOk;
}

}  // namespace ivdtr

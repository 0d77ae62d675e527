#include "svgmrf/cli.hpp"

#include "svgmrf/covariance.hpp"
#include "svgmrf/error.hpp"
#include "svgmrf/estimator.hpp"
#include "svgmrf/eval.hpp"
#include "svgmrf/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace svgmrf {

namespace fs = std::filesystem;

const char* exit_code_name(ExitCode code) {
    switch (code) {
        case ExitCode::ok: return "ok";
        case ExitCode::usage: return "usage";
        case ExitCode::invalid_argument: return "invalid_argument";
        case ExitCode::singular_backward_mapping: return "singular_backward_mapping";
        case ExitCode::not_positive_definite: return "not_positive_definite";
        case ExitCode::no_valid_model: return "no_valid_model";
        case ExitCode::solver_failure: return "solver_failure";
        case ExitCode::io_error: return "io_error";
        case ExitCode::verification_failed: return "verification_failed";
    }
    return "unknown";
}

std::string exit_code_help() {
    return "Exit codes:\n"
           "  0  ok\n"
           "  2  usage: bad flags or configuration\n"
           "  3  invalid_argument: rejected input values\n"
           "  4  singular_backward_mapping: thresholded covariance not invertible (raise --nu-const)\n"
           "  5  not_positive_definite: a precision matrix could not be factored\n"
           "  6  no_valid_model: every grid point was invalid\n"
           "  7  solver_failure: a coordinate did not reach --tol-kkt\n"
           "  8  io_error: unreadable or unwritable file\n"
           "  9  verification_failed: a verify-theory sweep found a violation\n";
}

namespace {

std::vector<double> parse_grid_values(const std::string& key, const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) {
            throw ConfigError("grid " + key + ": expected lo:hi:n");
        }
        const double lo = parse_double(parts[0]);
        const double hi = parse_double(parts[1]);
        const long long n = parse_integer(parts[2]);
        if (n < 1) {
            throw ConfigError("grid " + key + ": point count must be positive");
        }
        return log_grid(lo, hi, static_cast<std::size_t>(n));
    }
    std::vector<double> values;
    for (const auto& v : split(text, '/')) {
        values.push_back(parse_double(v));
    }
    if (values.empty()) {
        throw ConfigError("grid " + key + ": no values");
    }
    return values;
}

class PhaseTimer {
public:
    explicit PhaseTimer(std::ostream& log) : log_(log) {}

    template <class F>
    auto time(const std::string& phase, F&& body) {
        const auto start = std::chrono::steady_clock::now();
        auto finish = [&] {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            phases_.emplace_back(phase, s);
            log_ << "timing phase=" << phase << " seconds=" << s << '\n';
        };
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            finish();
        } else {
            auto result = body();
            finish();
            return result;
        }
    }

    void write(const fs::path& path) const {
        Manifest m;
        for (const auto& [phase, s] : phases_) {
            m.set(phase, s);
        }
        m.write(path);
    }

private:
    std::ostream& log_;
    std::vector<std::pair<std::string, double>> phases_;
};

ClusterDataset load_dataset(const RunConfig& cfg) {
    if (cfg.combined) {
        return ClusterDataset(read_clustered_csv(*cfg.combined));
    }
    std::vector<Eigen::MatrixXd> samples;
    for (const auto& p : cfg.data) {
        samples.push_back(read_matrix_csv(p));
    }
    return ClusterDataset(std::move(samples));
}

Eigen::MatrixXd uniform_weights(Index K) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(K, K);
    w.diagonal().setZero();
    return w;
}

Eigen::MatrixXd resolve_weights(const std::string& source, const std::vector<Eigen::MatrixXd>& covs) {
    const auto K = static_cast<Index>(covs.size());
    if (source == "auto") {
        return estimate_weights(covs);
    }
    if (source == "uniform") {
        return uniform_weights(K);
    }
    Eigen::MatrixXd w = read_matrix_csv(source);
    if (w.rows() != K || w.cols() != K) {
        throw InvalidArgument("weight matrix must be " + std::to_string(K) + " x " + std::to_string(K));
    }
    return w;
}

std::vector<double> resolve_nus(const RunConfig& cfg, const ClusterDataset& data) {
    std::vector<double> nus;
    for (std::size_t k = 0; k < data.clusters(); ++k) {
        if (cfg.nu) {
            nus.push_back(*cfg.nu);
        } else if (cfg.nu_const == 0.0) {
            nus.push_back(0.0);
        } else {
            nus.push_back(threshold_from_constant(cfg.nu_const, data.dimension(), data.sample_count(k)));
        }
    }
    return nus;
}

EstimatorOptions estimator_options(const RunConfig& cfg) {
    EstimatorOptions eo;
    eo.workers = cfg.workers;
    eo.solver.kkt_tolerance = cfg.tol_kkt;
    eo.penalize_diagonal = cfg.diag_penalty;
    eo.center = cfg.center;
    return eo;
}

fs::path cluster_file(const fs::path& dir, std::size_t k, const std::string& ext) {
    return dir / ("cluster_" + std::to_string(k) + ext);
}

void write_estimate(const fs::path& dir, const PrecisionEstimate& est) {
    for (std::size_t k = 0; k < est.clusters(); ++k) {
        write_edge_list(cluster_file(dir, k, ".edges"), est.precision[k]);
    }
}

std::vector<long long> counts_of(const ClusterDataset& data) {
    std::vector<long long> out;
    for (const Index n : data.sample_counts()) {
        out.push_back(n);
    }
    return out;
}

std::string join_ll(const std::vector<long long>& v) {
    std::vector<std::string> parts;
    for (const long long x : v) {
        parts.push_back(std::to_string(x));
    }
    return join(parts, ",");
}

void describe_run(Manifest& m, const RunConfig& cfg, const ClusterDataset& data) {
    m.set("command", cfg.subcommand);
    m.set("clusters", static_cast<long long>(data.clusters()));
    m.set("dimension", static_cast<long long>(data.dimension()));
    m.set("samples", join_ll(counts_of(data)));
    m.set("q", static_cast<long long>(cfg.q));
    m.set("weights", cfg.weights);
    m.set("center", cfg.center ? "on" : "off");
    m.set("diag_penalty", cfg.diag_penalty ? "on" : "off");
    m.set("tol_kkt", cfg.tol_kkt);
}

void describe_estimate(Manifest& m, const PrecisionEstimate& est) {
    m.set("max_kkt", est.max_kkt);
    m.set("mean_kkt", est.mean_kkt);
}

void cmd_generate(const RunConfig& cfg, std::ostream& log) {
    PhaseTimer timer(log);
    const SynthInstance inst = timer.time("generate", [&] { return generate(cfg.synth); });
    const SynthConfig& s = inst.config;
    Manifest m;
    m.set("command", "generate");
    m.set("clusters", static_cast<long long>(s.clusters));
    m.set("dimension", static_cast<long long>(s.dimension));
    m.set("modules", static_cast<long long>(s.modules));
    std::vector<Index> samples;
    for (Index k = 0; k < s.clusters; ++k) {
        samples.push_back(s.samples_for(k));
    }
    m.set("samples", join_indices(samples, ","));
    m.set("seed", std::to_string(s.seed));
    m.set("ba_attach", static_cast<long long>(s.ba_attach));
    m.set("perturb_prob", s.perturb_prob);
    m.set("weight_range", join_doubles({s.weight_range.first, s.weight_range.second}, ","));
    m.set("perturb_range", join_doubles({s.perturb_range.first, s.perturb_range.second}, ","));
    m.set("diag_factor", s.diag_factor);
    m.set("parent", join_indices(inst.truth.parent, ","));
    for (Index k = 0; k < s.clusters; ++k) {
        const auto& logk = inst.truth.perturbations[static_cast<std::size_t>(k)];
        const std::string prefix = "cluster_" + std::to_string(k) + ".";
        m.set(prefix + "reweighted", join_indices(logk.reweighted, ","));
        m.set(prefix + "regenerated", static_cast<long long>(logk.regenerated));
    }
    timer.time("write", [&] {
        m.write(cfg.out / "manifest.txt");
        for (std::size_t k = 0; k < inst.truth.precision.size(); ++k) {
            write_edge_list(cluster_file(cfg.out / "truth", k, ".edges"), inst.truth.precision[k]);
        }
        write_clustered_csv(cfg.out / "samples.csv", inst.samples);
    });
    timer.write(cfg.out / "timing.txt");
    log << "generated " << s.clusters << " clusters, d=" << s.dimension << ", " << s.modules << " modules in "
        << cfg.out.string() << '\n';
}

void cmd_estimate(const RunConfig& cfg, std::ostream& log) {
    PhaseTimer timer(log);
    const ClusterDataset data = timer.time("load", [&] { return load_dataset(cfg); });
    const auto covs = timer.time("covariance", [&] { return sample_covariances(data, cfg.center); });
    const Eigen::MatrixXd w = timer.time("weights", [&] { return resolve_weights(cfg.weights, covs); });
    const std::vector<double> nus = resolve_nus(cfg, data);
    const auto mappings = timer.time("backward_mapping", [&] {
        return backward_mappings(covs, nus, kDefaultConditionCap, cfg.workers);
    });
    const WeightGraph graph(w, cfg.q);
    const PrecisionEstimate est =
        timer.time("solve", [&] { return solve_svgmrf(mappings, graph, *cfg.mu, *cfg.gamma, estimator_options(cfg)); });

    Manifest m;
    describe_run(m, cfg, data);
    m.set("mu", *cfg.mu);
    m.set("gamma", *cfg.gamma);
    m.set("nu", join_doubles(nus, ","));
    if (!cfg.nu) {
        m.set("nu_const", cfg.nu_const);
    }
    describe_estimate(m, est);
    timer.time("write", [&] {
        write_estimate(cfg.out / "estimate", est);
        write_matrix_csv(cfg.out / "weights.csv", graph.weights());
        m.write(cfg.out / "run.txt");
    });
    timer.write(cfg.out / "timing.txt");
    log << "estimated " << data.clusters() << " clusters, d=" << data.dimension() << ", max kkt " << est.max_kkt
        << '\n';
}

void cmd_tune(const RunConfig& cfg, std::ostream& log) {
    PhaseTimer timer(log);
    const ClusterDataset data = timer.time("load", [&] { return load_dataset(cfg); });
    TuningOptions options;
    options.estimator = estimator_options(cfg);
    options.parallelism = cfg.parallelism;
    if (cfg.weights != "auto") {
        options.weights = resolve_weights(cfg.weights, sample_covariances(data, cfg.center));
    }
    const TuningGrid grid = cfg.grid.empty() ? TuningGrid{} : parse_grid(cfg.grid);
    const TuningResult result = timer.time("tune", [&] { return tune_parameters(data, cfg.q, grid, options); });

    Manifest m;
    describe_run(m, cfg, data);
    m.set("c1", *result.params.c1);
    m.set("c2", *result.params.c2);
    m.set("c3", *result.params.c3);
    m.set("mu", result.params.mu);
    m.set("gamma", result.params.gamma);
    m.set("nu", join_doubles(result.params.nu, ","));
    m.set("bic", result.report.rows[result.report.selected].bic.score);
    describe_estimate(m, result.estimate);
    timer.time("write", [&] {
        write_bic_report(cfg.out / "bic_report.csv", result.report);
        write_estimate(cfg.out / "estimate", result.estimate);
        write_matrix_csv(cfg.out / "weights.csv", result.weights);
        m.write(cfg.out / "run.txt");
    });
    timer.write(cfg.out / "timing.txt");
    log << "selected c1=" << *result.params.c1 << " c2=" << *result.params.c2 << " c3=" << *result.params.c3
        << " out of " << result.report.rows.size() << " grid points\n";
}

std::vector<Eigen::MatrixXd> read_cluster_edges(const fs::path& dir, std::size_t clusters, Index d) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t k = 0; k < clusters; ++k) {
        out.push_back(read_edge_list(cluster_file(dir, k, ".edges"), d));
    }
    return out;
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
    const Manifest truth_m = Manifest::read(cfg.truth_dir / "manifest.txt");
    const Manifest est_m = Manifest::read(cfg.estimate_dir / "run.txt");
    const auto K = static_cast<std::size_t>(truth_m.get_integer("clusters"));
    const auto d = static_cast<Index>(truth_m.get_integer("dimension"));
    if (static_cast<std::size_t>(est_m.get_integer("clusters")) != K || est_m.get_integer("dimension") != d) {
        throw InvalidArgument("estimate and truth have different shapes");
    }
    long long n_min = -1;
    for (const auto& n : split(truth_m.get("samples"), ',')) {
        const long long v = parse_integer(n);
        n_min = n_min < 0 ? v : std::min(n_min, v);
    }
    const auto truth = read_cluster_edges(cfg.truth_dir / "truth", K, d);
    const auto est = read_cluster_edges(cfg.estimate_dir / "estimate", K, d);

    const std::vector<std::string> keys{cfg.experiment, std::to_string(n_min), std::to_string(d), std::to_string(K),
                                        "svgmrf", est_m.get("q")};
    const std::vector<std::string> key_header{"experiment", "n_k", "d", "K", "method", "q"};

    std::vector<std::vector<std::string>> rows;
    auto add_metrics = [&](const std::string& scope, const SupportMetrics& s) {
        std::vector<std::string> row = keys;
        row.insert(row.end(), {scope, std::to_string(s.tp), std::to_string(s.fp), std::to_string(s.fn),
                               format_optional(s.precision), format_optional(s.recall), format_optional(s.f1)});
        rows.push_back(std::move(row));
    };
    for (const auto& s : support_metrics(est, truth, false)) {
        add_metrics("cluster_" + std::to_string(*s.cluster), s);
    }
    const SupportMetrics pooled = support_metrics(est, truth, true).front();
    add_metrics("pooled", pooled);
    if (K > 1) {
        add_metrics("difference", difference_metrics(est, truth));
    }
    std::vector<std::string> header = key_header;
    header.insert(header.end(), {"scope", "tp", "fp", "fn", "precision", "recall", "f1"});
    write_table_csv(cfg.out / "metrics.csv", header, rows);

    const EstimationErrors errors = estimation_errors(est, truth);
    std::vector<std::vector<std::string>> error_rows;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<std::string> row = keys;
        row.insert(row.end(), {"cluster_" + std::to_string(k), format_double(errors.max_norm[k])});
        error_rows.push_back(std::move(row));
    }
    std::vector<std::string> summary = keys;
    summary.insert(summary.end(), {"coordinate_l2_max", format_double(errors.coordinate_l2_max)});
    error_rows.push_back(summary);
    summary = keys;
    summary.insert(summary.end(), {"coordinate_l2_mean", format_double(errors.coordinate_l2_mean)});
    error_rows.push_back(summary);
    header = key_header;
    header.insert(header.end(), {"measure", "value"});
    write_table_csv(cfg.out / "errors.csv", header, error_rows);
    log << "pooled f1 " << format_optional(pooled.f1) << '\n';
}

ExitCode cmd_verify(const RunConfig& cfg, std::ostream& log) {
    PhaseTimer timer(log);
    const SweepReport prop =
        timer.time("irrepresentability_sweep", [&] { return irrepresentability_sweep(cfg.max_k, {1.0, 1.25, 1.5, 1.75, 2.0}); });
    const SweepReport inc = timer.time("incoherence_sweep", [&] {
        return incoherence_sweep(cfg.max_k_incoherence, {0.25, 0.5, 0.75, 0.99});
    });
    std::ostringstream report;
    auto line = [&](const std::string& name, const SweepReport& r, const std::string& value_name) {
        report << name << ' ' << (r.passed() ? "PASS" : "FAIL") << " cases=" << r.cases << " failures=" << r.failures
               << ' ' << value_name << '=' << format_double(r.worst_value);
        if (name == "irrepresentability") {
            report << " min_alpha_margin=" << format_double(r.worst_margin);
        }
        if (!r.passed()) {
            report << " first_failure=\"" << r.first_failure << '"';
        }
        report << '\n';
    };
    line("irrepresentability", prop, "max_kappa_ic");
    line("mutual_incoherence", inc, "max_value");
    std::ofstream out;
    fs::create_directories(cfg.out);
    out.open(cfg.out / "theory_report.txt", std::ios::binary);
    out << report.str();
    if (!out) {
        throw IoError("failed writing " + (cfg.out / "theory_report.txt").string());
    }
    log << report.str();
    return prop.passed() && inc.passed() ? ExitCode::ok : ExitCode::verification_failed;
}

struct BenchRow {
    Index d = 0;
    Index K = 0;
    double covariance = 0.0;
    double mapping = 0.0;
    double solve = 0.0;
    double max_kkt = 0.0;
};

BenchRow bench_once(const RunConfig& cfg, Index K, Index d) {
    SynthConfig s = cfg.synth;
    s.clusters = K;
    s.dimension = d;
    s.samples = {std::max<Index>(1, static_cast<Index>(std::llround(cfg.sample_factor * static_cast<double>(d))))};
    const SynthInstance inst = generate(s);
    const ClusterDataset data(inst.samples);
    const HyperParams p = make_hyper_params(cfg.c1, cfg.c2, cfg.c3, d, data.sample_counts(), cfg.q);
    BenchRow row;
    row.d = d;
    row.K = K;
    row.covariance = row.mapping = row.solve = std::numeric_limits<double>::infinity();
    using clock = std::chrono::steady_clock;
    auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
    for (int r = 0; r < cfg.repeats; ++r) {
        auto t = clock::now();
        const auto covs = sample_covariances(data, cfg.center);
        row.covariance = std::min(row.covariance, seconds(t));
        t = clock::now();
        const auto mappings = backward_mappings(covs, p.nu, kDefaultConditionCap, cfg.workers);
        row.mapping = std::min(row.mapping, seconds(t));
        const WeightGraph graph(resolve_weights(cfg.weights, covs), cfg.q);
        t = clock::now();
        const PrecisionEstimate est = solve_svgmrf(mappings, graph, p.mu, p.gamma, estimator_options(cfg));
        row.solve = std::min(row.solve, seconds(t));
        row.max_kkt = est.max_kkt;
    }
    return row;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_bench(const fs::path& path, const std::vector<BenchRow>& rows) {
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows) {
        const double vars = static_cast<double>(r.K) * static_cast<double>(r.d) * static_cast<double>(r.d + 1) / 2;
        table.push_back({std::to_string(r.d), std::to_string(r.K), format_double(vars), format_double(r.covariance),
                         format_double(r.mapping), format_double(r.solve), format_double(r.max_kkt)});
    }
    write_table_csv(path, {"d", "K", "variables", "covariance_seconds", "mapping_seconds", "solve_seconds", "max_kkt"},
                    table);
}

void cmd_benchmark(const RunConfig& cfg, std::ostream& log) {
    Manifest summary;
    auto run_series = [&](const std::string& name, const std::vector<std::pair<Index, Index>>& shapes) {
        std::vector<BenchRow> rows;
        std::vector<double> vars;
        std::vector<double> times;
        for (const auto& [K, d] : shapes) {
            rows.push_back(bench_once(cfg, K, d));
            const BenchRow& r = rows.back();
            vars.push_back(static_cast<double>(K) * static_cast<double>(d) * static_cast<double>(d + 1) / 2);
            times.push_back(r.solve);
            log << "benchmark K=" << K << " d=" << d << " variables=" << vars.back() << " solve_seconds=" << r.solve
                << '\n';
        }
        write_bench(cfg.out / ("scaling_" + name + ".csv"), rows);
        if (rows.size() >= 2) {
            summary.set("slope_" + name, loglog_slope(vars, times));
        }
    };
    std::vector<std::pair<Index, Index>> by_d;
    for (const Index d : cfg.dims) {
        by_d.emplace_back(cfg.synth.clusters, d);
    }
    run_series("d", by_d);
    if (!cfg.cluster_counts.empty()) {
        std::vector<std::pair<Index, Index>> by_k;
        for (const Index K : cfg.cluster_counts) {
            by_k.emplace_back(K, cfg.dims.front());
        }
        run_series("k", by_k);
    }
    summary.write(cfg.out / "benchmark.txt");
}

}  // namespace

TuningGrid parse_grid(const std::string& text) {
    TuningGrid grid;
    for (const auto& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("grid entries look like c1=values: '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        const auto values = parse_grid_values(key, item.substr(eq + 1));
        if (key == "c1") {
            grid.c1 = values;
        } else if (key == "c2") {
            grid.c2 = values;
        } else if (key == "c3") {
            grid.c3 = values;
        } else {
            throw ConfigError("unknown grid constant '" + key + "'");
        }
    }
    return grid;
}

void RunConfig::validate() const {
    static const std::vector<std::string> commands{"generate", "estimate", "tune", "evaluate", "verify-theory",
                                                   "benchmark"};
    if (std::find(commands.begin(), commands.end(), subcommand) == commands.end()) {
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    }
    if (q != 1 && q != 2) {
        throw ConfigError("--q must be 1 or 2");
    }
    if (workers < 1) {
        throw ConfigError("--workers must be at least 1");
    }
    if (!(tol_kkt > 0.0)) {
        throw ConfigError("--tol-kkt must be positive");
    }
    if (subcommand == "estimate" || subcommand == "tune") {
        if (data.empty() == !combined.has_value()) {
            throw ConfigError("give either --data files or one --combined file");
        }
        for (const auto& p : data) {
            if (!fs::is_regular_file(p)) {
                throw ConfigError("no such data file: " + p.string());
            }
        }
        if (combined && !fs::is_regular_file(*combined)) {
            throw ConfigError("no such data file: " + combined->string());
        }
    }
    if (subcommand == "estimate" || subcommand == "tune" || subcommand == "benchmark") {
        if (weights != "auto" && weights != "uniform" && !fs::is_regular_file(weights)) {
            throw ConfigError("--weights must be auto, uniform or an existing file");
        }
    }
    if (subcommand == "estimate") {
        if (!mu || !gamma) {
            throw ConfigError("estimate needs --mu and --gamma");
        }
        if (nu_const < 0.0) {
            throw ConfigError("--nu-const must be nonnegative");
        }
    }
    if (subcommand == "tune" && !grid.empty()) {
        parse_grid(grid);
    }
    if (subcommand == "evaluate") {
        if (!fs::is_regular_file(truth_dir / "manifest.txt")) {
            throw ConfigError("--truth must be a generate output directory");
        }
        if (!fs::is_regular_file(estimate_dir / "run.txt")) {
            throw ConfigError("--estimate must be an estimate or tune output directory");
        }
    }
    if (subcommand == "verify-theory" && (max_k < 2 || max_k_incoherence < 2)) {
        throw ConfigError("sweeps need K of at least 2");
    }
    if (subcommand == "benchmark" && (dims.empty() || repeats < 1 || !(sample_factor > 0.0))) {
        throw ConfigError("benchmark needs dimensions, repeats >= 1 and a positive sample factor");
    }
    if (subcommand == "generate" || subcommand == "benchmark") {
        try {
            SynthConfig s = synth;
            if (subcommand == "benchmark") {
                for (const Index d : dims) {
                    s.dimension = d;
                    s.validate();
                }
            } else {
                s.validate();
            }
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
}

ExitCode run(const RunConfig& config, std::ostream& log) {
    config.validate();
    const std::string& c = config.subcommand;
    if (c == "generate") {
        cmd_generate(config, log);
    } else if (c == "estimate") {
        cmd_estimate(config, log);
    } else if (c == "tune") {
        cmd_tune(config, log);
    } else if (c == "evaluate") {
        cmd_evaluate(config, log);
    } else if (c == "verify-theory") {
        return cmd_verify(config, log);
    } else {
        cmd_benchmark(config, log);
    }
    return ExitCode::ok;
}

namespace {

int report(std::ostream& err, ExitCode code, const std::string& message) {
    std::string escaped;
    for (const char ch : message) {
        if (ch == '"' || ch == '\\') {
            escaped += '\\';
        }
        escaped += ch == '\n' ? ' ' : ch;
    }
    err << "error: code=" << exit_code_name(code) << " exit=" << static_cast<int>(code) << " message=\"" << escaped
        << "\"\n";
    return static_cast<int>(code);
}

void add_common(CLI::App* app, RunConfig& cfg) {
    app->add_option("--out", cfg.out, "Output directory")->capture_default_str();
}

void add_estimator_flags(CLI::App* app, RunConfig& cfg, std::string& diag) {
    app->add_option("--q", cfg.q, "Fusion exponent")->check(CLI::IsMember({1, 2}))->capture_default_str();
    app->add_option("--weights", cfg.weights, "Pair weights: auto, uniform or a K x K CSV file")
        ->capture_default_str();
    app->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_flag("--center", cfg.center, "Center samples before forming covariances");
    app->add_option("--diag-penalty", diag, "Apply the l1 penalty to diagonal entries")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    app->add_option("--tol-kkt", cfg.tol_kkt, "KKT residual tolerance per coordinate")->capture_default_str();
}

void add_data_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--data", cfg.data, "Per-cluster sample CSV files, one per cluster");
    app->add_option("--combined", cfg.combined, "One sample CSV with the cluster id in the first column");
}

void add_synth_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--clusters", cfg.synth.clusters, "Number of clusters K")->capture_default_str();
    app->add_option("--modules", cfg.synth.modules, "Number of modules M")->capture_default_str();
    app->add_option("--seed", cfg.synth.seed, "Random seed")->capture_default_str();
    app->add_option("--attach", cfg.synth.ba_attach, "Barabasi-Albert attachment count")->capture_default_str();
    app->add_option("--perturb-prob", cfg.synth.perturb_prob, "Per-module reweighting probability")
        ->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Sparse spatially varying precision estimation for clustered Gaussian data", "svgmrf");
    app.footer(exit_code_help());
    app.require_subcommand(1);
    RunConfig cfg;
    std::string diag = "on";
    std::string parallel = "coordinates";

    auto* gen = app.add_subcommand("generate", "Write a synthetic ground truth and its samples");
    add_common(gen, cfg);
    add_synth_flags(gen, cfg);
    gen->add_option("--dimension", cfg.synth.dimension, "Number of variables d")->capture_default_str();
    gen->add_option("--samples", cfg.synth.samples, "Samples per cluster (one value or one per cluster)")
        ->delimiter(',');

    auto* est = app.add_subcommand("estimate", "Estimate precision matrices for fixed penalties");
    add_common(est, cfg);
    add_data_flags(est, cfg);
    add_estimator_flags(est, cfg, diag);
    est->add_option("--mu", cfg.mu, "Sparsity penalty mu");
    est->add_option("--gamma", cfg.gamma, "Fusion penalty gamma");
    est->add_option("--nu-const", cfg.nu_const, "Threshold constant; 0 disables thresholding")
        ->capture_default_str();
    est->add_option("--nu", cfg.nu, "Threshold for every cluster, overriding --nu-const");

    auto* tune = app.add_subcommand("tune", "Select penalties by extended BIC over a grid");
    add_common(tune, cfg);
    add_data_flags(tune, cfg);
    add_estimator_flags(tune, cfg, diag);
    tune->add_option("--grid", cfg.grid, "c1=lo:hi:n or c1=v1/v2/..., likewise c2 and c3, comma separated");
    tune->add_option("--parallel", parallel, "Parallelize over coordinates or over grid points")
        ->check(CLI::IsMember({"coordinates", "triples"}))
        ->capture_default_str();

    auto* eval = app.add_subcommand("evaluate", "Score an estimate against a generated ground truth");
    add_common(eval, cfg);
    eval->add_option("--truth", cfg.truth_dir, "Output directory of generate")->required();
    eval->add_option("--estimate", cfg.estimate_dir, "Output directory of estimate or tune")->required();
    eval->add_option("--experiment", cfg.experiment, "Experiment label for the metric rows")->capture_default_str();

    auto* verify = app.add_subcommand("verify-theory", "Check irrepresentability and incoherence exhaustively");
    add_common(verify, cfg);
    verify->add_option("--max-k", cfg.max_k, "Largest K in the irrepresentability sweep")->capture_default_str();
    verify->add_option("--max-k-incoherence", cfg.max_k_incoherence, "Largest K in the incoherence sweep")
        ->capture_default_str();

    auto* bench = app.add_subcommand("benchmark", "Time the solver against problem size");
    add_common(bench, cfg);
    add_synth_flags(bench, cfg);
    add_estimator_flags(bench, cfg, diag);
    bench->add_option("--dims", cfg.dims, "Dimensions d to time")->delimiter(',')->capture_default_str();
    bench->add_option("--clusters-list", cfg.cluster_counts, "Cluster counts to time at the first d")
        ->delimiter(',');
    bench->add_option("--repeats", cfg.repeats, "Repetitions; the minimum time is kept")->capture_default_str();
    bench->add_option("--sample-factor", cfg.sample_factor, "Samples per cluster as a multiple of d")
        ->capture_default_str();
    bench->add_option("--c1", cfg.c1, "Fusion constant")->capture_default_str();
    bench->add_option("--c2", cfg.c2, "Sparsity constant")->capture_default_str();
    bench->add_option("--c3", cfg.c3, "Threshold constant")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return report(err, ExitCode::usage, e.what());
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    cfg.diag_penalty = diag == "on";
    cfg.parallelism = parallel == "triples" ? TuningParallelism::triples : TuningParallelism::coordinates;

    try {
        return static_cast<int>(run(cfg, err));
    } catch (const ConfigError& e) {
        return report(err, ExitCode::usage, e.what());
    } catch (const SingularBackwardMapping& e) {
        return report(err, ExitCode::singular_backward_mapping, e.what());
    } catch (const NotPositiveDefinite& e) {
        return report(err, ExitCode::not_positive_definite, e.what());
    } catch (const NoValidModel& e) {
        return report(err, ExitCode::no_valid_model, e.what());
    } catch (const SolverFailure& e) {
        return report(err, ExitCode::solver_failure, e.what());
    } catch (const IoError& e) {
        return report(err, ExitCode::io_error, e.what());
    } catch (const InvalidArgument& e) {
        return report(err, ExitCode::invalid_argument, e.what());
    } catch (const std::invalid_argument& e) {
        return report(err, ExitCode::invalid_argument, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report(err, ExitCode::io_error, e.what());
    }
}

}  // namespace svgmrf

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dsparse/bounds.hpp>
#include <dsparse/diagnostics.hpp>
#include <dsparse/harness.hpp>
#include <dsparse/io.hpp>
#include <dsparse/simulate.hpp>

namespace {

using dsparse::Index;
using dsparse::ValidationError;
namespace harness = dsparse::harness;

struct Options
{
    std::vector<std::string> n, m, d, s, s0, sigma, q, rq;
    std::optional<double> kappa, lambda0, lambda_inf, magnitude;
    std::optional<std::string> design;
    Index s_prime = 0;
    Index iht_steps = 100;
    std::uint64_t seed = 1;
    std::size_t replicates = 1;
    unsigned threads = 1;
    std::string out;
    std::string summary_out;
    std::string format = "csv";
    std::string estimator = "dsiht";
    bool timing = false;

    // generate
    std::string model = "glm";
    // dsrip
    std::string method = "exhaustive";
    std::size_t trials = 10000;
    std::string design_path;
};

template <class T>
T parse_value(const std::string& name, const std::string& text)
{
    try {
        std::size_t used = 0;
        T value;
        if constexpr (std::is_floating_point_v<T>) {
            value = std::stod(text, &used);
        } else {
            value = static_cast<T>(std::stoll(text, &used));
        }
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ValidationError("--" + name + ": cannot parse '" + text + "'");
    }
}

template <class T>
std::vector<T> parse_list(const std::string& name, const std::vector<std::string>& raw)
{
    std::vector<T> out;
    for (const auto& text : raw) out.push_back(parse_value<T>(name, text));
    return out;
}

template <class T>
T single(const std::string& name, const std::vector<std::string>& raw, T fallback)
{
    if (raw.empty()) return fallback;
    if (raw.size() > 1) throw ValidationError("--" + name + " takes a single value for this subcommand");
    return parse_value<T>(name, raw.front());
}

harness::CellParams cell_from(const Options& o)
{
    harness::CellParams c;
    c.n = single<Index>("n", o.n, c.n);
    c.m = single<Index>("m", o.m, c.m);
    c.d = single<Index>("d", o.d, c.d);
    c.s = single<Index>("s", o.s, c.s);
    c.s0 = single<Index>("s0", o.s0, c.s0);
    c.sigma = single<double>("sigma", o.sigma, c.sigma);
    c.q = single<double>("q", o.q, c.q);
    c.rq = single<double>("rq", o.rq, c.rq);
    if (o.kappa) c.kappa = *o.kappa;
    c.lambda0 = o.lambda0;
    c.lambda_inf = o.lambda_inf;
    c.magnitude = o.magnitude;
    if (o.design) c.design = harness::parse_design(*o.design);
    c.s_prime = o.s_prime;
    c.iht_steps = o.iht_steps;
    return c;
}

void write_or_print(const std::string& path, const std::string& text)
{
    if (path.empty()) {
        std::cout << text;
    } else {
        dsparse::io::write_text(path, text);
    }
}

void run_generate(const Options& o)
{
    const auto params = cell_from(o);
    const bool glm = o.model == "glm";
    if (!glm && o.model != "regression") throw ValidationError("--model must be glm or regression");
    const auto estimator = glm ? harness::EstimatorId::projection_glm : harness::EstimatorId::dsiht;
    const auto cell = harness::resolve_cell(params, estimator);
    const dsparse::StreamId id{o.seed, 0, 0, dsparse::StreamPurpose::generic};

    dsparse::SignalSpec spec{params.q > 0.0 ? dsparse::SparsityBudget::soft(params.m, params.d, params.s, params.q,
                                                                            params.rq)
                                            : dsparse::SparsityBudget::hard(params.m, params.d, params.s, params.s0)};
    spec.magnitude = params.q > 0.0 ? dsparse::Magnitude{dsparse::LeastFavorableMagnitude{cell.magnitude}}
                                    : dsparse::Magnitude{dsparse::ConstantMagnitude{cell.magnitude}};
    spec.sign = dsparse::SignPattern::random;
    const auto theta = dsparse::gen_signal(spec, id);
    const dsparse::NoiseModel noise{params.sigma, params.n};

    if (o.out.empty()) {
        std::cout << dsparse::io::matrix_to_csv(theta.values());
        return;
    }
    dsparse::io::write_matrix(o.out + ".theta.csv", theta.values());
    if (glm) {
        dsparse::io::write_matrix(o.out + ".y.csv", dsparse::gen_glm(theta, noise, id).values());
    } else {
        const auto x = dsparse::gen_design(params.n, params.m * params.d, cell.design, id);
        const Eigen::VectorXd y = dsparse::gen_regression(x, dsparse::matrix_to_vec(theta), noise, id);
        dsparse::io::write_matrix(o.out + ".x.csv", x);
        dsparse::io::write_matrix(o.out + ".y.csv", y);
    }
}

void run_solve(const Options& o)
{
    const auto estimator = harness::parse_estimator(o.estimator);
    const auto format = harness::parse_format(o.format);
    const auto outcome = harness::solve_once(cell_from(o), estimator, o.seed);
    const auto& rec = outcome.record;

    if (format == harness::Format::json) {
        auto j = harness::to_json(rec);
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t t = 0; t < outcome.trace.steps.size(); ++t) {
            const auto& step = outcome.trace.steps[t];
            steps.push_back({{"t", t},
                             {"lambda", step.lambda},
                             {"nonzero_columns", step.nonzero_columns},
                             {"max_column_nonzeros", step.max_column_nonzeros},
                             {"error", step.error.value_or(0.0)},
                             {"bound_held", step.bound_held},
                             {"excess_admissible", step.excess_admissible}});
        }
        j["trace"] = steps;
        write_or_print(o.out, j.dump(2) + '\n');
        return;
    }

    using dsparse::io::format_double;
    std::string text = "t,lambda,nonzero_columns,max_column_nonzeros,error,bound_held,excess_admissible\n";
    for (std::size_t t = 0; t < outcome.trace.steps.size(); ++t) {
        const auto& step = outcome.trace.steps[t];
        text += std::to_string(t) + ',' + format_double(step.lambda) + ',' + std::to_string(step.nonzero_columns) +
                ',' + std::to_string(step.max_column_nonzeros) + ',' + format_double(step.error.value_or(0.0)) + ',' +
                (step.bound_held ? "1" : "0") + ',' + (step.excess_admissible ? "1" : "0") + '\n';
    }
    text += "# estimator=" + rec.estimator + " sq_error=" + format_double(rec.sq_error) +
            " iterations=" + std::to_string(rec.iterations) + " rate=" + format_double(rec.rate_value) + '\n';
    write_or_print(o.out, text);
}

void run_sweep(const Options& o)
{
    const auto estimator = harness::parse_estimator(o.estimator);
    const auto format = harness::parse_format(o.format);
    harness::SweepGrid grid;
    Options scalars = o;
    for (auto* list : {&scalars.n, &scalars.m, &scalars.d, &scalars.s, &scalars.s0, &scalars.sigma, &scalars.q, &scalars.rq})
        list->clear();
    grid.base = cell_from(scalars);
    grid.n = parse_list<Index>("n", o.n);
    grid.m = parse_list<Index>("m", o.m);
    grid.d = parse_list<Index>("d", o.d);
    grid.s = parse_list<Index>("s", o.s);
    grid.s0 = parse_list<Index>("s0", o.s0);
    grid.sigma = parse_list<double>("sigma", o.sigma);
    grid.q = parse_list<double>("q", o.q);
    grid.rq = parse_list<double>("rq", o.rq);

    const auto result = harness::run_sweep(grid, o.replicates, estimator, o.seed, {o.threads, o.timing});
    if (o.out.empty()) {
        std::cout << (format == harness::Format::csv ? harness::records_to_csv(result.records)
                                                     : harness::records_to_json_lines(result.records));
    } else {
        harness::emit(result.records, o.out, format);
    }
    if (!o.summary_out.empty()) harness::emit(result.summary, o.summary_out, format);
    std::cerr << "cells=" << result.summary.cells.size() << " records=" << result.records.size()
              << " slope=" << dsparse::io::format_double(result.summary.slope) << '\n';
}

void run_dsrip(const Options& o)
{
    const auto params = cell_from(o);
    Eigen::MatrixXd x;
    if (!o.design_path.empty()) {
        x = dsparse::io::read_matrix(o.design_path);
    } else {
        const auto kind = o.design ? harness::parse_design(*o.design) : dsparse::DesignKind::gaussian_iid;
        x = dsparse::gen_design(params.n, params.m * params.d, kind, {o.seed, 0, 0, dsparse::StreamPurpose::generic});
    }
    dsparse::DsripMethod method;
    if (o.method == "exhaustive") {
        method = dsparse::Exhaustive{};
    } else if (o.method == "monte_carlo") {
        method = dsparse::MonteCarlo{o.trials, {o.seed, 0, 0, dsparse::StreamPurpose::generic}};
    } else {
        throw ValidationError("--method must be exhaustive or monte_carlo");
    }
    const auto report = dsparse::dsrip(x, params.m, params.d, params.s, params.s0, method);
    write_or_print(o.out, dsparse::io::to_json(report).dump(2) + '\n');
}

void run_packing(const Options& o)
{
    const auto params = cell_from(o);
    const auto set = dsparse::build_product_packing(params.m, params.d, params.s, params.s0,
                                                   o.magnitude.value_or(1.0), o.threads);
    if (!o.out.empty()) dsparse::io::write_text(o.out, dsparse::io::codebook_text(set));
    const nlohmann::json summary{{"elements", set.size()},
                                 {"target", set.target},
                                 {"min_pairwise_hamming", set.min_pairwise_hamming},
                                 {"log_size", set.log_size()},
                                 {"log_size_bound", set.log_size_bound()},
                                 {"stages_meet_bounds", set.stages_meet_bounds()}};
    std::cout << summary.dump(2) << '\n';
}

void run_rates(const Options& o)
{
    const auto c = cell_from(o);
    const double n = static_cast<double>(c.n), m = static_cast<double>(c.m), d = static_cast<double>(c.d);
    const double s = static_cast<double>(c.s), s0 = static_cast<double>(c.s0);
    nlohmann::json j;
    if (c.q > 0.0) {
        const auto rate = dsparse::rate_soft(c.sigma, n, m, d, s, c.q, c.rq);
        const auto regime = dsparse::check_soft_regime(dsparse::SparsityBudget::soft(c.m, c.d, c.s, c.q, c.rq), c.n);
        j = {{"regime", "soft"},
             {"total", rate.total},
             {"group_term", rate.group_term},
             {"within_term", rate.within_term},
             {"regime_exponent", regime.exponent},
             {"regime_satisfied", regime.satisfied}};
    } else {
        (void)dsparse::SparsityBudget::hard(c.m, c.d, c.s, c.s0);
        const auto rate = dsparse::rate_hard(c.sigma, n, m, d, s, s0);
        j = {{"regime", "hard"},
             {"total", rate.total},
             {"group_term", rate.group_term},
             {"within_term", rate.within_term},
             {"lambda_inf", dsparse::default_lambda_inf(c.sigma, n, m * d, d, s, s0)},
             {"noise_event_bound", dsparse::noise_event_bound(c.sigma, n, m * d, d, s, s0)},
             {"log_covering_bound", dsparse::covering_bound_hard(m, d, s, s0)}};
    }
    write_or_print(o.out, j.dump(2) + '\n');
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Double-sparse recovery: estimators, diagnostics, packings and Monte-Carlo sweeps"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file; flags given on the command line take precedence");

    Options o;
    auto list = [&](const char* flag, std::vector<std::string>& target, const char* help) {
        app.add_option(flag, target, help)->delimiter(',');
    };
    list("--n", o.n, "sample size (comma list in sweep)");
    list("--m", o.m, "number of groups");
    list("--d", o.d, "group size");
    list("--s", o.s, "nonzero groups");
    list("--s0", o.s0, "nonzeros per group");
    list("--sigma", o.sigma, "noise level");
    list("--q", o.q, "soft-sparsity exponent, 0 for hard sparsity");
    list("--rq", o.rq, "soft-sparsity radius");
    app.add_option("--kappa", o.kappa, "threshold decay factor in (0, 1)");
    app.add_option("--lambda0", o.lambda0, "initial threshold");
    app.add_option("--lambda-inf", o.lambda_inf, "terminal threshold");
    app.add_option("--magnitude", o.magnitude, "signal magnitude");
    app.add_option("--design", o.design, "identity or gaussian");
    app.add_option("--s-prime", o.s_prime, "total nonzeros for dsiht_heterogeneous");
    app.add_option("--iht-steps", o.iht_steps, "iterations of iht_baseline");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--replicates", o.replicates, "replicates per cell");
    app.add_option("--threads", o.threads, "worker threads");
    app.add_option("--out", o.out, "output path (stdout when omitted)");
    app.add_option("--summary", o.summary_out, "sweep summary output path");
    app.add_option("--format", o.format, "csv or json");
    app.add_option("--estimator", o.estimator, "dsiht, dsiht_heterogeneous, projection_glm or iht_baseline");
    app.add_flag("--timing", o.timing, "record wall time per replicate");
    app.add_option("--model", o.model, "generate: glm or regression");
    app.add_option("--method", o.method, "dsrip: exhaustive or monte_carlo");
    app.add_option("--trials", o.trials, "dsrip: Monte-Carlo trials");
    app.add_option("--design-file", o.design_path, "dsrip: design matrix file");

    app.add_subcommand("generate", "draw a signal and its observations")->callback([&] { run_generate(o); });
    app.add_subcommand("solve", "run one estimator and print its trace")->callback([&] { run_solve(o); });
    app.add_subcommand("sweep", "Monte-Carlo grid run")->callback([&] { run_sweep(o); });
    app.add_subcommand("dsrip", "restricted isometry constants of a design")->callback([&] { run_dsrip(o); });
    app.add_subcommand("packing", "build and verify the product packing")->callback([&] { run_packing(o); });
    app.add_subcommand("rates", "evaluate the minimax rate formulas")->callback([&] { run_rates(o); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

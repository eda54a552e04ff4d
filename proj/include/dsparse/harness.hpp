#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bounds.hpp"
#include "core.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "simulate.hpp"

namespace dsparse::harness {

enum class EstimatorId { dsiht, dsiht_heterogeneous, projection_glm, iht_baseline };

inline std::string to_string(EstimatorId id)
{
    switch (id) {
    case EstimatorId::dsiht: return "dsiht";
    case EstimatorId::dsiht_heterogeneous: return "dsiht_heterogeneous";
    case EstimatorId::projection_glm: return "projection_glm";
    case EstimatorId::iht_baseline: return "iht_baseline";
    }
    return "?";
}

inline EstimatorId parse_estimator(const std::string& text)
{
    for (auto id : {EstimatorId::dsiht, EstimatorId::dsiht_heterogeneous, EstimatorId::projection_glm,
                    EstimatorId::iht_baseline}) {
        if (text == to_string(id)) return id;
    }
    throw ValidationError("unknown estimator '" + text + "'");
}

inline std::string to_string(DesignKind kind)
{
    return kind == DesignKind::identity_scaled ? "identity" : "gaussian";
}

inline DesignKind parse_design(const std::string& text)
{
    if (text == "identity" || text == "identity_scaled") return DesignKind::identity_scaled;
    if (text == "gaussian" || text == "gaussian_iid") return DesignKind::gaussian_iid;
    throw ValidationError("unknown design '" + text + "'");
}

/// Parameters of one Monte-Carlo cell. Unset optionals take the documented
/// defaults when the cell is resolved.
struct CellParams
{
    Index n = 200;
    Index m = 64;
    Index d = 32;
    Index s = 4;
    Index s0 = 4;
    double sigma = 1.0;
    /// 0 selects hard sparsity; q in (0, 1] together with rq selects the
    /// least-favorable soft-sparsity cell.
    double q = 0.0;
    double rq = 0.0;
    /// Heterogeneous total sparsity s'; 0 means s * s0.
    Index s_prime = 0;
    double kappa = 0.8;
    std::optional<double> lambda0;
    std::optional<double> lambda_inf;
    std::optional<double> magnitude;
    std::optional<DesignKind> design;
    Index iht_steps = 100;
};

/// One replicate of one cell.
struct ExperimentRecord
{
    std::size_t cell = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::string estimator;
    Index n = 0, m = 0, d = 0, s = 0, s0 = 0, s_prime = 0;
    double sigma = 0.0, q = 0.0, rq = 0.0, kappa = 0.0;
    double lambda0 = 0.0, lambda_inf = 0.0, magnitude = 0.0;
    std::string design;
    double sq_error = 0.0;
    std::size_t iterations = 0;
    /// One character per trace entry, '1' when the invariant held.
    std::string bound_flags;
    std::string excess_flags;
    bool bound_pass = true;
    bool excess_pass = true;
    double rate_value = 0.0;
    double wall_time = 0.0;

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// The rate formula for a record's cell: rate_soft when q > 0, else rate_hard.
inline double rate_for(Index n, Index m, Index d, Index s, Index s0, double sigma, double q, double rq)
{
    if (q > 0.0) {
        return rate_soft(sigma, static_cast<double>(n), static_cast<double>(m), static_cast<double>(d),
                         static_cast<double>(s), q, rq)
            .total;
    }
    return rate_hard(sigma, static_cast<double>(n), static_cast<double>(m), static_cast<double>(d),
                     static_cast<double>(s), static_cast<double>(s0))
        .total;
}

inline double recompute_rate(const ExperimentRecord& r)
{
    return rate_for(r.n, r.m, r.d, r.s, r.s0, r.sigma, r.q, r.rq);
}

struct RunOptions
{
    unsigned threads = 1;
    bool record_timing = false;
};

/// A cell with every default filled in.
struct ResolvedCell
{
    CellParams params;
    DesignKind design;
    double lambda_inf;
    double magnitude;
    Index s0; // per-column sparsity actually used (soft cells derive it)
};

inline ResolvedCell resolve_cell(const CellParams& c, EstimatorId estimator)
{
    if (c.n < 1) dsparse::detail::fail("cell: n must be positive");
    if (!(c.sigma >= 0.0)) dsparse::detail::fail("cell: sigma must be >= 0");
    if (!(c.q >= 0.0 && c.q <= 1.0)) dsparse::detail::fail("cell: q must be 0 (hard) or lie in (0, 1]");
    ResolvedCell r{c, DesignKind::gaussian_iid, 0.0, 0.0, c.s0};

    const bool glm = estimator == EstimatorId::projection_glm;
    r.design = c.design.value_or(glm ? DesignKind::identity_scaled : DesignKind::gaussian_iid);
    if (glm && c.design && *c.design != DesignKind::identity_scaled) {
        throw ValidationError("projection_glm runs on the Gaussian location model and needs the identity design");
    }
    if (c.q > 0.0 && !glm) {
        throw ValidationError("soft-sparsity cells (q > 0) are only supported with projection_glm");
    }

    const double p = static_cast<double>(c.m * c.d);
    if (c.q > 0.0) {
        // least-favorable soft cell: {0, delta} columns with delta^q s0 = R_q
        const auto budget = SparsityBudget::soft(c.m, c.d, c.s, c.q, c.rq);
        (void)budget;
        const double sigma_ref = c.sigma > 0.0 ? c.sigma : 1.0;
        r.magnitude = c.magnitude.value_or(
            sigma_ref * std::sqrt(std::log(static_cast<double>(c.d)) / static_cast<double>(c.n)));
        r.s0 = std::clamp<Index>(static_cast<Index>(std::floor(c.rq / std::pow(r.magnitude, c.q) + 1e-9)), 1, c.d);
        r.lambda_inf = 0.0;
        return r;
    }

    (void)SparsityBudget::hard(c.m, c.d, c.s, c.s0);
    const double sigma_ref = c.sigma > 0.0 ? c.sigma : 1.0;
    const double reference = default_lambda_inf(sigma_ref, static_cast<double>(c.n), p, static_cast<double>(c.d),
                                                static_cast<double>(c.s), static_cast<double>(c.s0));
    r.magnitude = c.magnitude.value_or(3.0 * reference);
    if (c.lambda_inf) {
        r.lambda_inf = *c.lambda_inf;
    } else if (c.sigma > 0.0) {
        r.lambda_inf = default_lambda_inf(c.sigma, static_cast<double>(c.n), p, static_cast<double>(c.d),
                                          static_cast<double>(c.s), static_cast<double>(c.s0));
    } else {
        // noiseless: run the schedule far below the signal scale
        r.lambda_inf = 1e-10 * std::abs(r.magnitude);
    }
    return r;
}

namespace detail {

inline std::string flags_string(const IterationTrace& trace, bool IterationStep::*flag)
{
    std::string out;
    out.reserve(trace.steps.size());
    for (const auto& step : trace.steps) out.push_back(step.*flag ? '1' : '0');
    return out;
}

inline ExperimentRecord run_replicate(const ResolvedCell& cell, EstimatorId estimator, std::uint64_t seed,
                                      std::size_t cell_index, std::size_t replicate, bool timing,
                                      IterationTrace* trace_out = nullptr)
{
    const auto start = std::chrono::steady_clock::now();
    const auto& c = cell.params;
    const StreamId id{seed, cell_index, replicate, StreamPurpose::generic};

    ExperimentRecord rec;
    rec.cell = cell_index;
    rec.replicate = replicate;
    rec.seed = seed;
    rec.estimator = to_string(estimator);
    rec.n = c.n;
    rec.m = c.m;
    rec.d = c.d;
    rec.s = c.s;
    rec.s0 = cell.s0;
    rec.sigma = c.sigma;
    rec.q = c.q;
    rec.rq = c.rq;
    rec.kappa = c.kappa;
    rec.lambda_inf = cell.lambda_inf;
    rec.magnitude = cell.magnitude;
    rec.design = to_string(cell.design);
    rec.rate_value = rate_for(c.n, c.m, c.d, c.s, cell.s0, c.sigma, c.q, c.rq);

    const Index p = c.m * c.d;
    const NoiseModel noise{c.sigma, c.n};

    if (estimator == EstimatorId::projection_glm) {
        SignalSpec spec{c.q > 0.0 ? SparsityBudget::soft(c.m, c.d, c.s, c.q, c.rq)
                                  : SparsityBudget::hard(c.m, c.d, c.s, c.s0)};
        spec.magnitude = c.q > 0.0 ? Magnitude{LeastFavorableMagnitude{cell.magnitude}}
                                   : Magnitude{ConstantMagnitude{cell.magnitude}};
        spec.sign = SignPattern::random;
        const auto theta = gen_signal(spec, id);
        const auto y = gen_glm(theta, noise, id);
        const auto estimate = project_double_sparse(y, c.s, cell.s0);
        rec.sq_error = (estimate.values() - theta.values()).squaredNorm();
    } else {
        const bool hetero = estimator == EstimatorId::dsiht_heterogeneous;
        rec.s_prime = hetero ? (c.s_prime > 0 ? c.s_prime : c.s * c.s0) : 0;
        const auto budget = hetero ? SparsityBudget::heterogeneous(c.m, c.d, c.s, c.s0, rec.s_prime)
                                   : SparsityBudget::hard(c.m, c.d, c.s, c.s0);
        SignalSpec spec{budget};
        spec.magnitude = ConstantMagnitude{cell.magnitude};
        spec.sign = SignPattern::random;
        const Eigen::VectorXd beta = matrix_to_vec(gen_signal(spec, id));
        const Eigen::MatrixXd x = gen_design(c.n, p, cell.design, id);
        const Eigen::VectorXd y = gen_regression(x, beta, noise, id);

        if (estimator == EstimatorId::iht_baseline) {
            const auto estimate = iht_baseline(x, y, c.s * c.s0, c.iht_steps);
            rec.sq_error = (estimate - beta).squaredNorm();
            rec.iterations = static_cast<std::size_t>(c.iht_steps);
        } else {
            ThresholdSchedule schedule;
            schedule.kappa = c.kappa;
            schedule.lambda_inf = cell.lambda_inf;
            schedule.lambda0 = c.lambda0.value_or(default_lambda0(x, y, c.s, c.s0));
            rec.lambda0 = schedule.lambda0;
            const Eigen::VectorXd start = Eigen::VectorXd::Zero(p);
            const auto result = hetero ? dsiht_heterogeneous(x, y, budget, schedule, start, beta)
                                       : dsiht(x, y, budget, schedule, start, beta);
            rec.sq_error = (result.beta_hat - beta).squaredNorm();
            rec.iterations = result.trace.iterations();
            rec.bound_flags = flags_string(result.trace, &IterationStep::bound_held);
            rec.excess_flags = flags_string(result.trace, &IterationStep::excess_admissible);
            rec.bound_pass = result.trace.all_bounds_held();
            rec.excess_pass = result.trace.all_excess_admissible();
            if (trace_out) *trace_out = result.trace;
        }
    }

    if (timing) {
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return rec;
}

/// Run tasks [0, count) on `threads` workers; each task writes its own slot.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task)
{
    threads = std::max(1u, threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t k = 0; k < count; ++k) task(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = next++; k < count; k = next++) task(k);
            } catch (...) {
                errors[w] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace detail

/// Run `replicates` independent replicates of one cell. Replicate r uses the
/// streams (seed, cell_index, r), so the output does not depend on the
/// number of threads.
inline std::vector<ExperimentRecord> run_cell(const CellParams& params, std::size_t replicates, EstimatorId estimator,
                                              std::uint64_t seed, std::size_t cell_index = 0,
                                              const RunOptions& options = {})
{
    const auto cell = resolve_cell(params, estimator);
    std::vector<ExperimentRecord> out(replicates);
    detail::parallel_for(replicates, options.threads, [&](std::size_t r) {
        out[r] = detail::run_replicate(cell, estimator, seed, cell_index, r, options.record_timing);
    });
    return out;
}

struct SolveOutcome
{
    ExperimentRecord record;
    IterationTrace trace; // empty for estimators without a threshold schedule
};

/// A single replicate together with its iteration trace.
inline SolveOutcome solve_once(const CellParams& params, EstimatorId estimator, std::uint64_t seed,
                               std::size_t replicate = 0)
{
    SolveOutcome out;
    const auto cell = resolve_cell(params, estimator);
    out.record = detail::run_replicate(cell, estimator, seed, 0, replicate, false, &out.trace);
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps

/// Cartesian grid of cell parameters. Expansion order is n, m, d, s, s0,
/// sigma, q, rq with the last one varying fastest.
struct SweepGrid
{
    CellParams base;
    std::vector<Index> n, m, d, s, s0;
    std::vector<double> sigma, q, rq;

    std::vector<CellParams> expand() const
    {
        auto or_base = [](const auto& list, auto value) {
            using T = std::decay_t<decltype(value)>;
            return list.empty() ? std::vector<T>{value} : list;
        };
        std::vector<CellParams> cells;
        for (auto vn : or_base(n, base.n))
            for (auto vm : or_base(m, base.m))
                for (auto vd : or_base(d, base.d))
                    for (auto vs : or_base(s, base.s))
                        for (auto vs0 : or_base(s0, base.s0))
                            for (auto vsig : or_base(sigma, base.sigma))
                                for (auto vq : or_base(q, base.q))
                                    for (auto vrq : or_base(rq, base.rq)) {
                                        CellParams c = base;
                                        c.n = vn, c.m = vm, c.d = vd, c.s = vs, c.s0 = vs0;
                                        c.sigma = vsig, c.q = vq, c.rq = vrq;
                                        cells.push_back(c);
                                    }
        return cells;
    }
};

struct CellSummary
{
    std::size_t cell = 0;
    Index n = 0, m = 0, d = 0, s = 0, s0 = 0;
    double sigma = 0.0, q = 0.0, rq = 0.0;
    std::size_t replicates = 0;
    double rate_value = 0.0;
    double mean_error = 0.0;
    double median_error = 0.0;
    double bound_pass_rate = 0.0;
    double excess_pass_rate = 0.0;
};

struct SweepSummary
{
    std::vector<CellSummary> cells;
    /// OLS fit of ln(mean error) on ln(rate value) across cells.
    double slope = 0.0;
    double intercept = 0.0;
};

struct SweepResult
{
    std::vector<ExperimentRecord> records; // ordered by (cell, replicate)
    SweepSummary summary;
};

struct LineFit
{
    double slope;
    double intercept;
};

/// Ordinary least squares y = intercept + slope x.
inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const double k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= k;
    my /= k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

inline SweepSummary summarize(const std::vector<ExperimentRecord>& records)
{
    SweepSummary summary;
    for (std::size_t k = 0; k < records.size();) {
        std::size_t end = k;
        while (end < records.size() && records[end].cell == records[k].cell) ++end;
        const auto& first = records[k];
        CellSummary c;
        c.cell = first.cell;
        c.n = first.n, c.m = first.m, c.d = first.d, c.s = first.s, c.s0 = first.s0;
        c.sigma = first.sigma, c.q = first.q, c.rq = first.rq;
        c.replicates = end - k;
        c.rate_value = first.rate_value;
        std::vector<double> errors;
        double bound = 0.0, excess = 0.0;
        for (std::size_t r = k; r < end; ++r) {
            errors.push_back(records[r].sq_error);
            bound += records[r].bound_pass;
            excess += records[r].excess_pass;
        }
        double total = 0.0;
        for (double e : errors) total += e;
        c.mean_error = total / static_cast<double>(errors.size());
        std::sort(errors.begin(), errors.end());
        const std::size_t mid = errors.size() / 2;
        c.median_error = errors.size() % 2 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
        c.bound_pass_rate = bound / static_cast<double>(c.replicates);
        c.excess_pass_rate = excess / static_cast<double>(c.replicates);
        summary.cells.push_back(c);
        k = end;
    }

    std::vector<double> rates;
    for (const auto& c : summary.cells) {
        if (std::find(rates.begin(), rates.end(), c.rate_value) == rates.end()) rates.push_back(c.rate_value);
    }
    if (rates.size() < 3) {
        throw ValidationError("sweep: slope needs at least 3 distinct rate values, grid has " +
                              std::to_string(rates.size()));
    }
    std::vector<double> x, y;
    for (const auto& c : summary.cells) {
        if (!(c.mean_error > 0.0)) throw ValidationError("sweep: slope needs positive mean errors in every cell");
        x.push_back(std::log(c.rate_value));
        y.push_back(std::log(c.mean_error));
    }
    const auto fit = least_squares_line(x, y);
    summary.slope = fit.slope;
    summary.intercept = fit.intercept;
    return summary;
}

/// Run every cell of the grid. (cell, replicate) tasks share one work
/// queue; results are gathered by (cell, replicate) before summarising.
inline SweepResult run_sweep(const SweepGrid& grid, std::size_t replicates, EstimatorId estimator, std::uint64_t seed,
                             const RunOptions& options = {})
{
    const auto cells = grid.expand();
    if (cells.size() < 3) throw ValidationError("sweep: grid must contain at least 3 cells");
    if (replicates == 0) throw ValidationError("sweep: replicates must be positive");
    std::vector<ResolvedCell> resolved;
    for (const auto& c : cells) resolved.push_back(resolve_cell(c, estimator));

    SweepResult out;
    out.records.resize(cells.size() * replicates);
    detail::parallel_for(out.records.size(), options.threads, [&](std::size_t k) {
        const std::size_t cell = k / replicates;
        const std::size_t r = k % replicates;
        out.records[k] = detail::run_replicate(resolved[cell], estimator, seed, cell, r, options.record_timing);
    });
    out.summary = summarize(out.records);
    return out;
}

// ---------------------------------------------------------------------------
// Serialisation

enum class Format { csv, json };

inline Format parse_format(const std::string& text)
{
    if (text == "csv") return Format::csv;
    if (text == "json") return Format::json;
    throw ValidationError("unknown format '" + text + "' (expected csv or json)");
}

inline const char* kRecordColumns =
    "cell,replicate,seed,estimator,n,m,d,s,s0,s_prime,sigma,q,rq,kappa,lambda0,lambda_inf,magnitude,design,"
    "sq_error,iterations,bound_flags,excess_flags,bound_pass,excess_pass,rate_value,wall_time";

inline std::string records_to_csv(const std::vector<ExperimentRecord>& records)
{
    using io::format_double;
    std::ostringstream os;
    os << kRecordColumns << '\n';
    for (const auto& r : records) {
        os << r.cell << ',' << r.replicate << ',' << r.seed << ',' << r.estimator << ',' << r.n << ',' << r.m << ','
           << r.d << ',' << r.s << ',' << r.s0 << ',' << r.s_prime << ',' << format_double(r.sigma) << ','
           << format_double(r.q) << ',' << format_double(r.rq) << ',' << format_double(r.kappa) << ','
           << format_double(r.lambda0) << ',' << format_double(r.lambda_inf) << ',' << format_double(r.magnitude)
           << ',' << r.design << ',' << format_double(r.sq_error) << ',' << r.iterations << ',' << r.bound_flags
           << ',' << r.excess_flags << ',' << (r.bound_pass ? 1 : 0) << ',' << (r.excess_pass ? 1 : 0) << ','
           << format_double(r.rate_value) << ',' << format_double(r.wall_time) << '\n';
    }
    return os.str();
}

inline std::vector<ExperimentRecord> records_from_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != kRecordColumns) throw ValidationError("records csv: unexpected header '" + line + "'");
    std::vector<ExperimentRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream cells(line);
        while (std::getline(cells, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 26) throw ValidationError("records csv: expected 26 fields, got " + std::to_string(f.size()));
        auto as_index = [](const std::string& t) { return static_cast<Index>(std::stoll(t)); };
        auto as_size = [](const std::string& t) { return static_cast<std::size_t>(std::stoull(t)); };
        using io::parse_double;
        ExperimentRecord r;
        r.cell = as_size(f[0]);
        r.replicate = as_size(f[1]);
        r.seed = std::stoull(f[2]);
        r.estimator = f[3];
        r.n = as_index(f[4]);
        r.m = as_index(f[5]);
        r.d = as_index(f[6]);
        r.s = as_index(f[7]);
        r.s0 = as_index(f[8]);
        r.s_prime = as_index(f[9]);
        r.sigma = parse_double(f[10]);
        r.q = parse_double(f[11]);
        r.rq = parse_double(f[12]);
        r.kappa = parse_double(f[13]);
        r.lambda0 = parse_double(f[14]);
        r.lambda_inf = parse_double(f[15]);
        r.magnitude = parse_double(f[16]);
        r.design = f[17];
        r.sq_error = parse_double(f[18]);
        r.iterations = as_size(f[19]);
        r.bound_flags = f[20];
        r.excess_flags = f[21];
        r.bound_pass = f[22] == "1";
        r.excess_pass = f[23] == "1";
        r.rate_value = parse_double(f[24]);
        r.wall_time = parse_double(f[25]);
        out.push_back(std::move(r));
    }
    return out;
}

inline nlohmann::json to_json(const ExperimentRecord& r)
{
    return nlohmann::json{{"cell", r.cell},
                          {"replicate", r.replicate},
                          {"seed", r.seed},
                          {"estimator", r.estimator},
                          {"n", r.n},
                          {"m", r.m},
                          {"d", r.d},
                          {"s", r.s},
                          {"s0", r.s0},
                          {"s_prime", r.s_prime},
                          {"sigma", r.sigma},
                          {"q", r.q},
                          {"rq", r.rq},
                          {"kappa", r.kappa},
                          {"lambda0", r.lambda0},
                          {"lambda_inf", r.lambda_inf},
                          {"magnitude", r.magnitude},
                          {"design", r.design},
                          {"sq_error", r.sq_error},
                          {"iterations", r.iterations},
                          {"bound_flags", r.bound_flags},
                          {"excess_flags", r.excess_flags},
                          {"bound_pass", r.bound_pass},
                          {"excess_pass", r.excess_pass},
                          {"rate_value", r.rate_value},
                          {"wall_time", r.wall_time}};
}

inline ExperimentRecord record_from_json(const nlohmann::json& j)
{
    ExperimentRecord r;
    j.at("cell").get_to(r.cell);
    j.at("replicate").get_to(r.replicate);
    j.at("seed").get_to(r.seed);
    j.at("estimator").get_to(r.estimator);
    j.at("n").get_to(r.n);
    j.at("m").get_to(r.m);
    j.at("d").get_to(r.d);
    j.at("s").get_to(r.s);
    j.at("s0").get_to(r.s0);
    j.at("s_prime").get_to(r.s_prime);
    j.at("sigma").get_to(r.sigma);
    j.at("q").get_to(r.q);
    j.at("rq").get_to(r.rq);
    j.at("kappa").get_to(r.kappa);
    j.at("lambda0").get_to(r.lambda0);
    j.at("lambda_inf").get_to(r.lambda_inf);
    j.at("magnitude").get_to(r.magnitude);
    j.at("design").get_to(r.design);
    j.at("sq_error").get_to(r.sq_error);
    j.at("iterations").get_to(r.iterations);
    j.at("bound_flags").get_to(r.bound_flags);
    j.at("excess_flags").get_to(r.excess_flags);
    j.at("bound_pass").get_to(r.bound_pass);
    j.at("excess_pass").get_to(r.excess_pass);
    j.at("rate_value").get_to(r.rate_value);
    j.at("wall_time").get_to(r.wall_time);
    return r;
}

/// One JSON object per line.
inline std::string records_to_json_lines(const std::vector<ExperimentRecord>& records)
{
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + '\n';
    return out;
}

inline std::vector<ExperimentRecord> records_from_json_lines(const std::string& text)
{
    std::vector<ExperimentRecord> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

inline void emit(const std::vector<ExperimentRecord>& records, const std::string& path, Format format)
{
    io::write_text(path, format == Format::csv ? records_to_csv(records) : records_to_json_lines(records));
}

inline std::vector<ExperimentRecord> read_records(const std::string& path, Format format)
{
    const auto text = io::read_text(path);
    try {
        return format == Format::csv ? records_from_csv(text) : records_from_json_lines(text);
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline const char* kSummaryColumns =
    "cell,n,m,d,s,s0,sigma,q,rq,replicates,rate_value,mean_error,median_error,bound_pass_rate,excess_pass_rate";

/// Per-cell table preceded by a comment line carrying the fitted slope.
inline std::string summary_to_csv(const SweepSummary& summary)
{
    using io::format_double;
    std::ostringstream os;
    os << "# slope=" << format_double(summary.slope) << " intercept=" << format_double(summary.intercept) << '\n';
    os << kSummaryColumns << '\n';
    for (const auto& c : summary.cells) {
        os << c.cell << ',' << c.n << ',' << c.m << ',' << c.d << ',' << c.s << ',' << c.s0 << ','
           << format_double(c.sigma) << ',' << format_double(c.q) << ',' << format_double(c.rq) << ','
           << c.replicates << ',' << format_double(c.rate_value) << ',' << format_double(c.mean_error) << ','
           << format_double(c.median_error) << ',' << format_double(c.bound_pass_rate) << ','
           << format_double(c.excess_pass_rate) << '\n';
    }
    return os.str();
}

inline nlohmann::json to_json(const SweepSummary& summary)
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : summary.cells) {
        cells.push_back({{"cell", c.cell},
                         {"n", c.n},
                         {"m", c.m},
                         {"d", c.d},
                         {"s", c.s},
                         {"s0", c.s0},
                         {"sigma", c.sigma},
                         {"q", c.q},
                         {"rq", c.rq},
                         {"replicates", c.replicates},
                         {"rate_value", c.rate_value},
                         {"mean_error", c.mean_error},
                         {"median_error", c.median_error},
                         {"bound_pass_rate", c.bound_pass_rate},
                         {"excess_pass_rate", c.excess_pass_rate}});
    }
    return {{"slope", summary.slope}, {"intercept", summary.intercept}, {"cells", cells}};
}

inline void emit(const SweepSummary& summary, const std::string& path, Format format)
{
    io::write_text(path, format == Format::csv ? summary_to_csv(summary) : to_json(summary).dump(2) + '\n');
}

} // namespace dsparse::harness

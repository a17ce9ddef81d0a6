#include "mfptrl/bench.hpp"

#include "mfptrl/errors.hpp"
#include "mfptrl/solvers.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace mfptrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MethodEntry {
    Method method;
    std::string_view name;
};

constexpr MethodEntry kMethods[] = {
    {Method::q, "q"},         {Method::dyna, "dyna"}, {Method::mfpt_q, "mfpt-q"},
    {Method::mfpt_dyna, "mfpt-dyna"}, {Method::vi, "vi"},     {Method::pvi, "pvi"},
};

std::optional<Algorithm> learner_for(Method m) {
    switch (m) {
    case Method::q: return Algorithm::q_learning;
    case Method::dyna: return Algorithm::dyna;
    case Method::mfpt_q: return Algorithm::mfpt_q;
    case Method::mfpt_dyna: return Algorithm::mfpt_dyna;
    default: return std::nullopt;
    }
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open '" + p.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) throw IoFailure("write to '" + p.string() + "' failed");
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create directory '" + dir.string() + "': " + ec.message());
}

} // namespace

std::string format_number(double x) {
    if (!std::isfinite(x)) return "NA";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::string_view method_name(Method m) {
    for (const auto& e : kMethods)
        if (e.method == m) return e.name;
    return "?";
}

Method parse_method(std::string_view name) {
    for (const auto& e : kMethods)
        if (e.name == name) return e.method;
    throw ValidationError("unknown algorithm '" + std::string(name) +
                          "' (expected q, dyna, mfpt-q, mfpt-dyna, vi or pvi)");
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ValidationError("config needs a non-empty seed list");
    if (!(step_cost >= 0.0)) throw ValidationError("step_cost must be non-negative");
    params.validate();
}

namespace {

template <class T>
T parse_value(std::string_view text, std::size_t line, std::size_t column) {
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ParseError("invalid value '" + std::string(text) + "'", line, column);
    return value;
}

std::vector<std::uint64_t> parse_seeds(std::string_view text, std::size_t line, std::size_t column) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string_view item =
            text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos);
        seeds.push_back(parse_value<std::uint64_t>(item, line, column + pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return seeds;
}

} // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    bool have_algorithm = false;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.remove_suffix(1);
        std::size_t k0 = 0;
        while (k0 < line.size() && (line[k0] == ' ' || line[k0] == '\t')) ++k0;
        if (k0 == line.size()) continue;

        std::size_t k1 = k0;
        while (k1 < line.size() && line[k1] != ' ' && line[k1] != '\t') ++k1;
        std::size_t v0 = k1;
        while (v0 < line.size() && (line[v0] == ' ' || line[v0] == '\t')) ++v0;
        const std::string_view key = line.substr(k0, k1 - k0);
        const std::string_view value = line.substr(v0);
        const std::size_t col = v0 + 1;
        if (value.empty()) throw ParseError("missing value for '" + std::string(key) + "'", line_no, k0 + 1);
        if (!seen.insert(std::string(key)).second)
            throw ParseError("duplicate key '" + std::string(key) + "'", line_no, k0 + 1);

        LearnParams& p = cfg.params;
        if (key == "map") {
            const std::filesystem::path mp{std::string(value)};
            cfg.map_path = mp.is_absolute() || base_dir.empty() ? mp : (base_dir / mp).lexically_normal();
        } else if (key == "algorithm") {
            try {
                cfg.algorithm = parse_method(value);
            } catch (const ValidationError& e) {
                throw ParseError(e.what(), line_no, col);
            }
            have_algorithm = true;
        } else if (key == "seeds") cfg.seeds = parse_seeds(value, line_no, col);
        else if (key == "output_dir") {
            const std::filesystem::path op{std::string(value)};
            cfg.output_dir = op.is_absolute() || base_dir.empty() ? op : (base_dir / op).lexically_normal();
        }
        else if (key == "label") cfg.label = std::string(value);
        else if (key == "step_cost") cfg.step_cost = parse_value<double>(value, line_no, col);
        else if (key == "alpha") p.alpha = parse_value<double>(value, line_no, col);
        else if (key == "gamma") p.gamma = parse_value<double>(value, line_no, col);
        else if (key == "epsilon_greedy") p.epsilon_greedy = parse_value<double>(value, line_no, col);
        else if (key == "epsilon_tol") p.epsilon_tol = parse_value<double>(value, line_no, col);
        else if (key == "planning_steps") p.planning_steps = parse_value<int>(value, line_no, col);
        else if (key == "mfpt_period") p.mfpt_period = parse_value<int>(value, line_no, col);
        else if (key == "exploration_mix") p.exploration_mix = parse_value<double>(value, line_no, col);
        else if (key == "mu_cap") p.mu_cap = parse_value<double>(value, line_no, col);
        else if (key == "sample_budget") p.sample_budget = parse_value<long>(value, line_no, col);
        else if (key == "checkpoint_interval") p.checkpoint_interval = parse_value<long>(value, line_no, col);
        else if (key == "max_vi_sweeps") p.max_vi_sweeps = parse_value<long>(value, line_no, col);
        else if (key == "stable_phases") p.stable_phases = parse_value<int>(value, line_no, col);
        else throw ParseError("unknown key '" + std::string(key) + "'", line_no, k0 + 1);
    }
    if (cfg.map_path.empty()) throw ValidationError("config is missing 'map'");
    if (!have_algorithm) throw ValidationError("config is missing 'algorithm'");
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot read config '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Oracle and convergence

Oracle::Oracle(const TabularMdp& mdp, double bellman_residual_limit) {
    const SolveResult solved = value_iteration(mdp, {kSolveTolerance, 10'000'000});
    values_ = solved.v;
    policy_ = solved.pi;
    residual_ = bellman_residual(mdp, values_);
    if (residual_ > bellman_residual_limit)
        throw std::logic_error("oracle Bellman residual " + std::to_string(residual_) +
                               " exceeds " + std::to_string(bellman_residual_limit));

    const int n = mdp.n_states();
    judged_ = goal_reachable_states(mdp);
    judged_[mdp.goal()] = false;
    optimal_.assign(n, std::vector<bool>(mdp.n_actions(), false));
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < mdp.n_actions(); ++a)
            optimal_[s][a] = action_value(mdp, values_, s, a) >= values_[s] - kTieTolerance;
}

int Oracle::mistakes(const Policy& pi) const {
    int count = 0;
    for (std::size_t s = 0; s < pi.size(); ++s)
        if (judged_[s] && !optimal_[s][pi[s]]) ++count;
    return count;
}

bool Oracle::is_optimal(const Policy& pi) const { return mistakes(pi) == 0; }

Convergence judge_trace(const LearningTrace& trace, const Oracle& oracle) {
    Policy pi(trace.n_states, 0);
    int wrong = oracle.mistakes(pi);
    std::optional<std::size_t> first_good;
    for (std::size_t i = 0; i < trace.checkpoints.size(); ++i) {
        for (const PolicyChange& ch : trace.checkpoints[i].changes) {
            const int s = ch.state;
            if (oracle.judged(s)) {
                wrong -= oracle.is_optimal_action(s, pi[s]) ? 0 : 1;
                wrong += oracle.is_optimal_action(s, ch.action) ? 0 : 1;
            }
            pi[s] = ch.action;
        }
        if (wrong == 0) {
            if (!first_good) first_good = i;
        } else {
            first_good.reset();
        }
    }
    Convergence out;
    if (first_good) {
        const Checkpoint& c = trace.checkpoints[*first_good];
        out.samples = c.samples;
        out.wall_ms = c.wall_ms;
        out.sweeps = c.sweeps;
    } else if (!trace.checkpoints.empty()) {
        out.wall_ms = trace.checkpoints.back().wall_ms;
        out.sweeps = trace.checkpoints.back().sweeps;
    }
    return out;
}

Quartiles quartiles(std::vector<double> values) {
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    std::sort(values.begin(), values.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = static_cast<std::size_t>(std::ceil(pos));
        if (lo == hi || values[lo] == values[hi]) return values[lo];
        if (std::isinf(values[hi])) return kInf;
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {at(0.25), at(0.5), at(0.75)};
}

// ---------------------------------------------------------------------------
// Experiments

MetricsReport run_experiment(const ExperimentConfig& cfg) {
    return run_experiment(cfg, load_map(cfg.map_path.string()));
}

MetricsReport run_experiment(const ExperimentConfig& cfg, const GridSpec& map) {
    cfg.validate();
    const GridWorld world(map);
    const TabularMdp truth = world.build_mdp(cfg.params.gamma);
    const Oracle oracle(truth, cfg.params.epsilon_tol);

    MetricsReport report;
    report.algorithm = std::string(method_name(cfg.algorithm));
    const auto learner = learner_for(cfg.algorithm);
    for (std::uint64_t seed : cfg.seeds) {
        RunMetrics m;
        m.algorithm = report.algorithm;
        m.seed = seed;
        if (learner) {
            LearnParams p = cfg.params;
            p.seed = seed;
            const LearningTrace trace = run_learner(*learner, world, p);
            const Convergence c = judge_trace(trace, oracle);
            m.samples_to_converge = c.samples;
            m.vi_sweeps_total = c.samples ? c.sweeps : trace.sweeps_total;
            m.wall_clock_ms = c.wall_ms;
            m.samples_consumed = trace.samples_consumed;
        } else {
            const ConvergenceParams cp{cfg.params.epsilon_tol, cfg.params.max_vi_sweeps};
            const auto t0 = std::chrono::steady_clock::now();
            const SolveResult r = cfg.algorithm == Method::vi ? value_iteration(truth, cp)
                                                              : value_change_prioritized_vi(truth, cp);
            m.wall_clock_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            m.vi_sweeps_total = r.sweeps;
            if (oracle.is_optimal(r.pi)) m.samples_to_converge = 0;
        }
        m.training_time_proxy =
            m.samples_to_converge ? static_cast<double>(*m.samples_to_converge) * cfg.step_cost : kInf;
        report.runs.push_back(m);
    }

    std::vector<double> samples, sweeps, wall;
    for (const RunMetrics& m : report.runs) {
        samples.push_back(m.samples_to_converge ? static_cast<double>(*m.samples_to_converge) : kInf);
        sweeps.push_back(static_cast<double>(m.vi_sweeps_total));
        wall.push_back(m.wall_clock_ms);
        if (m.converged()) ++report.converged_runs;
    }
    report.samples_to_converge = quartiles(samples);
    report.vi_sweeps_total = quartiles(sweeps);
    report.wall_clock_ms = quartiles(wall);
    return report;
}

std::string metrics_csv(const MetricsReport& report) {
    std::string out = "algorithm,seed,samples_to_converge,vi_sweeps_total,training_time_proxy,converged\n";
    for (const RunMetrics& m : report.runs) {
        out += m.algorithm + ',' + std::to_string(m.seed) + ',' +
               (m.samples_to_converge ? std::to_string(*m.samples_to_converge) : "NA") + ',' +
               std::to_string(m.vi_sweeps_total) + ',' + format_number(m.training_time_proxy) + ',' +
               (m.converged() ? "1" : "0") + '\n';
    }
    return out;
}

std::string timing_csv(const MetricsReport& report) {
    std::string out = "algorithm,seed,wall_clock_ms\n";
    for (const RunMetrics& m : report.runs)
        out += m.algorithm + ',' + std::to_string(m.seed) + ',' + format_number(m.wall_clock_ms) + '\n';
    return out;
}

std::string summary_csv(const MetricsReport& report) {
    std::string out = "metric,q1,median,q3\n";
    auto row = [&](const char* name, const Quartiles& q) {
        out += std::string(name) + ',' + format_number(q.q1) + ',' + format_number(q.median) + ',' +
               format_number(q.q3) + '\n';
    };
    row("samples_to_converge", report.samples_to_converge);
    row("vi_sweeps_total", report.vi_sweeps_total);
    out += "converged_runs," + std::to_string(report.converged_runs) + ',' +
           std::to_string(report.converged_runs) + ',' + std::to_string(report.converged_runs) + '\n';
    return out;
}

void write_report(const MetricsReport& report, const std::filesystem::path& out_dir,
                  const std::string& stem) {
    ensure_dir(out_dir);
    write_file(out_dir / (stem + ".csv"), metrics_csv(report));
    write_file(out_dir / (stem + ".timing.csv"), timing_csv(report));
    write_file(out_dir / (stem + ".summary.csv"), summary_csv(report));
}

// ---------------------------------------------------------------------------
// Comparison

ComparisonTable compare(const std::vector<ExperimentConfig>& cfgs) {
    if (cfgs.empty()) throw ConfigMismatch("compare needs at least one config");
    const GridSpec map = load_map(cfgs.front().map_path.string());
    for (const ExperimentConfig& c : cfgs)
        if (!(load_map(c.map_path.string()) == map))
            throw ConfigMismatch("config maps differ ('" + c.map_path.string() + "')");
    return compare(cfgs, map);
}

ComparisonTable compare(const std::vector<ExperimentConfig>& cfgs, const GridSpec& map) {
    if (cfgs.empty()) throw ConfigMismatch("compare needs at least one config");
    for (const ExperimentConfig& c : cfgs)
        if (c.seeds != cfgs.front().seeds) throw ConfigMismatch("config seed lists differ");

    ComparisonTable table;
    for (const ExperimentConfig& c : cfgs) {
        MetricsReport r = run_experiment(c, map);
        r.algorithm = c.stem();
        for (RunMetrics& m : r.runs) m.algorithm = r.algorithm;
        table.rows.push_back({r.algorithm, static_cast<int>(r.runs.size()), r.converged_runs,
                              r.samples_to_converge.median, r.wall_clock_ms.median,
                              r.vi_sweeps_total.median});
        table.reports.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < table.reports.size(); ++i) {
        for (std::size_t j = i + 1; j < table.reports.size(); ++j) {
            PairwiseWins w{table.reports[i].algorithm, table.reports[j].algorithm};
            const auto& a = table.reports[i].runs;
            const auto& b = table.reports[j].runs;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double sa = a[k].samples_to_converge ? static_cast<double>(*a[k].samples_to_converge) : kInf;
                const double sb = b[k].samples_to_converge ? static_cast<double>(*b[k].samples_to_converge) : kInf;
                if (sa < sb) ++w.first_wins;
                else if (sb < sa) ++w.second_wins;
                else ++w.ties;
            }
            table.wins.push_back(w);
        }
    }
    return table;
}

std::string comparison_csv(const ComparisonTable& table) {
    std::string out = "algorithm,runs,converged,median_samples_to_converge,median_vi_sweeps_total\n";
    for (const ComparisonRow& r : table.rows)
        out += r.algorithm + ',' + std::to_string(r.runs) + ',' + std::to_string(r.converged) + ',' +
               format_number(r.median_samples) + ',' + format_number(r.median_sweeps) + '\n';
    return out;
}

std::string comparison_timing_csv(const ComparisonTable& table) {
    std::string out = "algorithm,median_wall_clock_ms\n";
    for (const ComparisonRow& r : table.rows)
        out += r.algorithm + ',' + format_number(r.median_wall_ms) + '\n';
    return out;
}

std::string wins_csv(const ComparisonTable& table) {
    std::string out = "algorithm_a,algorithm_b,a_wins,b_wins,ties\n";
    for (const PairwiseWins& w : table.wins)
        out += w.first + ',' + w.second + ',' + std::to_string(w.first_wins) + ',' +
               std::to_string(w.second_wins) + ',' + std::to_string(w.ties) + '\n';
    return out;
}

void write_comparison(const ComparisonTable& table, const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    write_file(out_dir / "comparison.csv", comparison_csv(table));
    write_file(out_dir / "comparison.timing.csv", comparison_timing_csv(table));
    write_file(out_dir / "wins.csv", wins_csv(table));
    for (const MetricsReport& r : table.reports) write_report(r, out_dir, r.algorithm);
}

// ---------------------------------------------------------------------------
// Landscapes

MfptVector learned_landscape(const LearnedModel& model, const QTable& q, int goal,
                             const LearnParams& params) {
    const TabularMdp mdp = model.to_mdp(goal, params.gamma);
    return solve_mfpt(induced_chain(mdp, q.greedy(), params.exploration_mix), goal, params.mu_cap);
}

std::vector<LandscapeSnapshot> landscape(const ExperimentConfig& cfg,
                                         const std::vector<long>& at_samples) {
    return landscape(cfg, load_map(cfg.map_path.string()), at_samples);
}

std::vector<LandscapeSnapshot> landscape(const ExperimentConfig& cfg, const GridSpec& map,
                                         const std::vector<long>& at_samples) {
    cfg.validate();
    const auto learner = learner_for(cfg.algorithm);
    if (!learner || (*learner != Algorithm::mfpt_q && *learner != Algorithm::mfpt_dyna))
        throw ValidationError("landscape requires algorithm mfpt-q or mfpt-dyna");
    for (long t : at_samples)
        if (t < 0) throw ValidationError("landscape sample counts must be non-negative");

    const GridWorld world(map);
    LearnParams params = cfg.params;
    params.seed = cfg.seeds.front();

    std::vector<long> wanted(at_samples);
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    std::vector<LandscapeSnapshot> snaps;
    std::size_t next = 0;
    RunOptions options;
    options.observer = [&](const LearnerView& view) {
        while (next < wanted.size() && wanted[next] == view.samples) {
            snaps.push_back({wanted[next], view.samples,
                             learned_landscape(*view.model, view.q, view.goal, params), {}});
            ++next;
        }
    };
    const LearningTrace trace = run_learner(*learner, world, params, options);
    for (; next < wanted.size(); ++next)
        snaps.push_back({wanted[next], trace.samples_consumed,
                         learned_landscape(*trace.model, trace.q, world.goal(), params), {}});

    ensure_dir(cfg.output_dir);
    for (LandscapeSnapshot& s : snaps) {
        s.base = cfg.output_dir / (cfg.stem() + "_landscape_s" + std::to_string(s.requested_samples));
        landscape_export(s.mfpt, map.shape, kDefaultLandscapeClip, s.base, world.cell_states());
    }
    return snaps;
}

} // namespace mfptrl

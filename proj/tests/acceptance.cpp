// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. Pass criterion numbers as arguments to run a subset.

#include "mfptrl/bench.hpp"
#include "mfptrl/errors.hpp"
#include "mfptrl/gridworld.hpp"
#include "mfptrl/learners.hpp"
#include "mfptrl/reachability.hpp"
#include "mfptrl/solvers.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

using namespace mfptrl;
namespace fs = std::filesystem;

namespace {

const fs::path kData = MFPTRL_DATA_DIR;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Two-sided normal quantile by bisection on erfc.
double normal_quantile_upper(double tail) {
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::sqrt(2.0)) > tail) lo = mid;
        else hi = mid;
    }
    return hi;
}

void criterion1(Verdict& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const int chains = 100;
    const long episodes = 100000;
    double worst_residual = 0.0;
    long comparisons = 0, beyond3 = 0;
    double worst_z = 0.0;
    for (int c = 0; c < chains; ++c) {
        const int n = 2 + (c * 7) % 49;
        const auto dense = testsupport::random_regular_chain(n, 1000 + c);
        const ChainMatrix chain = ChainMatrix::from_dense(dense);
        const int goal = n - 1;
        const MfptVector mu = solve_mfpt(chain, goal);
        for (int i = 0; i < n; ++i) {
            if (i == goal || mu.capped[i]) continue;
            double rhs = 1.0;
            for (int k = 0; k < n; ++k)
                if (k != goal) rhs += dense[i][k] * mu.mu[k];
            worst_residual = std::max(worst_residual, std::abs(rhs - mu.mu[i]));
        }
        for (int i = 0; i < n; ++i)
            if (i != goal && mu.capped[i]) out.check(false, "capped state in a regular chain");
        const MonteCarloMfpt mc = mfpt_monte_carlo(chain, goal, episodes, 100000, 77 + c);
        for (int i = 0; i < n; ++i) {
            if (i == goal) continue;
            ++comparisons;
            const double z = std::abs(mc.mean[i] - mu.mu[i]) / mc.std_error[i];
            worst_z = std::max(worst_z, z);
            if (z > 3.0) ++beyond3;
        }
    }
    // Family-wise 5% level over all comparisons.
    const double z_bonf = normal_quantile_upper(0.05 / static_cast<double>(comparisons));
    // Exceedances of 3 SE are Binomial(m, 0.0027) under a correct solver.
    const double p3 = std::erfc(3.0 / std::sqrt(2.0));
    const double expected3 = p3 * comparisons;
    const double allowed3 = expected3 + 4.0 * std::sqrt(expected3 * (1.0 - p3));
    const double elapsed = seconds_since(t0);
    out.check(worst_residual <= 1e-8, "residual");
    out.check(worst_z <= z_bonf, "Monte-Carlo deviation beyond the Bonferroni threshold");
    out.check(beyond3 <= allowed3, "3-SE exceedance count inconsistent with nominal rate");
    out.check(elapsed < 60.0, "runtime");
    out.detail << "chains=" << chains << " max_residual=" << worst_residual
               << " comparisons=" << comparisons << " beyond_3se=" << beyond3 << " (expected "
               << expected3 << ", allowed " << allowed3 << ") max_z=" << worst_z
               << " bonferroni_z=" << z_bonf << " time_s=" << elapsed;
}

GridSpec criterion2_map(int i) {
    if (i % 5 == 4) return generate_map({3, 3, 3, true}, 2 + i % 4, 500 + i);
    const GridShape shapes[] = {{5, 5}, {6, 4}, {4, 6}, {7, 3}};
    return generate_map(shapes[i % 4], i % 7, 500 + i);
}

void criterion2(Verdict& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const LearnParams params;
    const double tol = params.epsilon_tol;
    const ConvergenceParams cp{tol, params.max_vi_sweeps};
    double worst_value = 0.0, worst_truth = 0.0;
    int policy_mismatch = 0, not_optimal = 0;
    for (int i = 0; i < 20; ++i) {
        const GridSpec spec = criterion2_map(i);
        const GridWorld w(spec);
        if (w.n_states() > 25) out.check(false, "map larger than 25 states");
        const TabularMdp mdp = w.build_mdp(params.gamma);
        const SolveResult vi = value_iteration(mdp, cp);
        const SolveResult pvi = value_change_prioritized_vi(mdp, cp);
        QTable q(mdp.n_states(), mdp.n_actions());
        ValueFunction v(mdp.n_states(), 0.0);
        mfpt_vi_phase(LearnedModel::exact(mdp), q, v, mdp.goal(), params);
        worst_value = std::max({worst_value, max_value_diff(vi.v, pvi.v), max_value_diff(vi.v, v),
                                max_value_diff(pvi.v, v)});
        // Lowest-index action within 1e-3 of the best lookahead: far below the
        // gap to any suboptimal move, far above the solvers' value error.
        const Policy a = greedy_policy(mdp, vi.v, 1e-3);
        if (a != greedy_policy(mdp, pvi.v, 1e-3) || a != greedy_policy(mdp, v, 1e-3)) ++policy_mismatch;

        const auto dense = testsupport::grid_dense_mdp(spec, params.gamma);
        const auto truth = testsupport::path_enumeration_values(dense, spec.goal_reward, spec.step_reward);
        worst_truth = std::max(worst_truth, max_value_diff(vi.v, truth));
        const auto achieved = testsupport::evaluate_policy(dense, vi.pi);
        if (max_value_diff(achieved, truth) > 1e-6) ++not_optimal;
    }
    // Literal enumeration over every deterministic policy on tiny maps.
    int tiny_mismatch = 0;
    const char* tiny[] = {"2d 3 2\nS..\n..G\n", "2d 4 2\nS...\nXX.G\n",
                          "2d 6 1\nS....G\n", "3d 1 2 3\nS\n.\n\n.\nX\n\nG\n.\n"};
    for (const char* text : tiny) {
        const GridSpec spec = parse_map(text);
        const auto dense = testsupport::grid_dense_mdp(spec, params.gamma);
        std::vector<std::vector<int>> best;
        const auto truth = testsupport::exhaustive_policy_values(dense, &best);
        const SolveResult vi = value_iteration(build_mdp(spec, params.gamma), cp);
        if (max_value_diff(vi.v, truth) > 2 * tol ||
            std::find(best.begin(), best.end(), vi.pi) == best.end())
            ++tiny_mismatch;
    }
    const double elapsed = seconds_since(t0);
    out.check(worst_value <= 2 * tol, "planner values disagree");
    out.check(policy_mismatch == 0, "greedy policies differ");
    out.check(worst_truth <= 2 * tol && not_optimal == 0, "value_iteration vs path enumeration");
    out.check(tiny_mismatch == 0, "value_iteration vs exhaustive policy enumeration");
    out.check(elapsed < 60.0, "runtime");
    out.detail << "maps=20 max_planner_diff=" << worst_value << " policy_mismatches=" << policy_mismatch
               << " max_vi_vs_enumeration=" << worst_truth << " tiny_maps_mismatch=" << tiny_mismatch
               << " time_s=" << elapsed;
}

ExperimentConfig data_config(const std::string& name, const fs::path& out_dir) {
    ExperimentConfig cfg = load_config(kData / "configs" / name);
    cfg.output_dir = out_dir;
    return cfg;
}

const ComparisonRow& row_of(const ComparisonTable& t, const std::string& name) {
    for (const auto& r : t.rows)
        if (r.algorithm == name) return r;
    throw std::logic_error("missing comparison row " + name);
}

int paired_wins(const MetricsReport& challenger, const MetricsReport& baseline) {
    int wins = 0;
    for (std::size_t k = 0; k < challenger.runs.size(); ++k) {
        const auto& a = challenger.runs[k].samples_to_converge;
        const auto& b = baseline.runs[k].samples_to_converge;
        if (a && (!b || *a < *b)) ++wins;
    }
    return wins;
}

void criterion3(Verdict& out, const fs::path& scratch) {
    const auto t0 = std::chrono::steady_clock::now();
    const ComparisonTable t = compare({data_config("grid20_q.cfg", scratch), data_config("grid20_mfpt_q.cfg", scratch),
                                       data_config("grid20_dyna.cfg", scratch),
                                       data_config("grid20_mfpt_dyna.cfg", scratch)});
    write_comparison(t, scratch / "criterion3");
    const auto& q = row_of(t, "q");
    const auto& mq = row_of(t, "mfpt-q");
    const auto& d = row_of(t, "dyna");
    const auto& md = row_of(t, "mfpt-dyna");
    const int n = q.runs;
    const int wins_q = paired_wins(t.reports[1], t.reports[0]);
    const int wins_d = paired_wins(t.reports[3], t.reports[2]);
    const double elapsed = seconds_since(t0);
    out.check(mq.median_samples < q.median_samples, "median MFPT-Q < Q");
    out.check(md.median_samples < d.median_samples, "median MFPT-DYNA < DYNA");
    out.check(wins_q * 10 >= n * 7, "MFPT-Q paired wins >= 70%");
    out.check(wins_d * 10 >= n * 7, "MFPT-DYNA paired wins >= 70%");
    out.check(elapsed < 600.0, "runtime");
    out.detail << "seeds=" << n << " median q=" << format_number(q.median_samples)
               << " mfpt-q=" << format_number(mq.median_samples) << " dyna=" << format_number(d.median_samples)
               << " mfpt-dyna=" << format_number(md.median_samples) << " wins mfpt-q/q=" << wins_q << "/" << n
               << " mfpt-dyna/dyna=" << wins_d << "/" << n << " time_s=" << elapsed;
}

void criterion4(Verdict& out, const fs::path& scratch) {
    const auto t0 = std::chrono::steady_clock::now();
    const ComparisonTable t =
        compare({data_config("grid52_dyna.cfg", scratch), data_config("grid52_mfpt_dyna.cfg", scratch)});
    write_comparison(t, scratch / "criterion4");
    const auto& d = row_of(t, "dyna");
    const auto& md = row_of(t, "mfpt-dyna");
    const GridWorld w(load_map(load_config(kData / "configs" / "grid52_dyna.cfg").map_path.string()));
    // Medians over converged runs only.
    auto converged_median = [](const MetricsReport& r, bool wall) {
        std::vector<double> xs;
        for (const auto& m : r.runs)
            if (m.converged()) xs.push_back(wall ? m.wall_clock_ms : static_cast<double>(*m.samples_to_converge));
        return quartiles(xs).median;
    };
    const double d_wall = converged_median(t.reports[0], true);
    const double md_wall = converged_median(t.reports[1], true);
    const double d_samples = converged_median(t.reports[0], false);
    const double md_samples = converged_median(t.reports[1], false);
    const double elapsed = seconds_since(t0);
    out.check(w.n_states() >= 2500, "map has at least 2500 states");
    out.check(d.converged == d.runs && md.converged == md.runs, "every run converged");
    out.check(md_wall > d_wall, "MFPT-DYNA wall-clock exceeds DYNA");
    out.check(md_samples < d_samples, "MFPT-DYNA uses fewer samples");
    out.check(elapsed < 900.0, "runtime");
    out.detail << "states=" << w.n_states() << " runs=" << d.runs << " converged dyna=" << d.converged
               << " mfpt-dyna=" << md.converged << " median samples dyna=" << format_number(d_samples)
               << " mfpt-dyna=" << format_number(md_samples) << " median wall_ms dyna=" << format_number(d_wall)
               << " mfpt-dyna=" << format_number(md_wall) << " time_s=" << elapsed;
}

double mean_pixel(const std::string& pgm) {
    std::vector<int> pixels;
    if (!testsupport::validate_pgm(pgm, -1, -1, &pixels).empty() || pixels.empty()) return -1.0;
    double s = 0.0;
    for (int p : pixels) s += p;
    return s / static_cast<double>(pixels.size());
}

void criterion5(Verdict& out, const fs::path& scratch) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = data_config("fig1_mfpt_q.cfg", scratch / "criterion5");
    const GridSpec map = load_map(cfg.map_path.string());
    const GridWorld w(map);
    const std::vector<long> at = {0, 2000, 8000, 40000};
    const auto snaps = landscape(cfg, map, at);
    const auto reachable = goal_reachable_states(w.build_mdp(cfg.params.gamma));

    std::vector<double> means;
    for (const auto& s : snaps) {
        double sum = 0.0;
        for (double m : s.mfpt.mu) sum += m;
        means.push_back(sum / static_cast<double>(s.mfpt.size()));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < means.size(); ++i) monotone = monotone && means[i] <= means[i - 1];
    const MfptVector& last = snaps.back().mfpt;
    bool final_ok = last.mu[w.goal()] == 0.0;
    for (int s = 0; s < w.n_states(); ++s)
        if (reachable[s] && last.capped[s]) final_ok = false;

    out.check(snaps.front().mfpt.all_capped_except_goal(), "initial snapshot fully capped");
    out.check(monotone, "mean mu non-increasing");
    out.check(final_ok, "final snapshot goal 0 and reachable states uncapped");
    out.detail << "snapshots=";
    for (std::size_t i = 0; i < snaps.size(); ++i)
        out.detail << (i ? "," : "") << snaps[i].actual_samples;
    out.detail << " mean_mu=";
    for (std::size_t i = 0; i < means.size(); ++i) out.detail << (i ? "," : "") << means[i];
    out.detail << " mean_pixel=";
    for (std::size_t i = 0; i < snaps.size(); ++i)
        out.detail << (i ? "," : "") << mean_pixel(testsupport::read_file(snaps[i].base.string() + ".pgm"));
    out.detail << " time_s=" << seconds_since(t0);
}

void criterion6(Verdict& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const GridWorld w(load_map((kData / "maps" / "grid20.map").string()));
    int dyna_same = 0, mfpt_same = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LearnParams p;
        p.seed = seed;
        p.sample_budget = 20000;
        p.planning_steps = 0;
        dyna_same += run_dyna(w, p).same_run(run_q_learning(w, p));
        mfpt_same += run_mfpt_dyna(w, p).same_run(run_mfpt_q(w, p));
    }
    out.check(dyna_same == 5, "DYNA(N=0) == Q-learning");
    out.check(mfpt_same == 5, "MFPT-DYNA(N=0) == MFPT-Q");
    out.detail << "identical dyna/q=" << dyna_same << "/5 mfpt-dyna/mfpt-q=" << mfpt_same
               << "/5 time_s=" << seconds_since(t0);
}

std::string read_or_empty(const fs::path& p) {
    try {
        return testsupport::read_file(p);
    } catch (...) {
        return {};
    }
}

void criterion7(Verdict& out, const fs::path& scratch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Repeated runs of every algorithm produce identical CSVs.
    int csv_diffs = 0, configs = 0;
    for (const char* alg : {"q", "dyna", "mfpt-q", "mfpt-dyna", "vi", "pvi"}) {
        ExperimentConfig cfg = data_config("fig1_mfpt_q.cfg", {});
        cfg.algorithm = parse_method(alg);
        cfg.seeds = {1, 2};
        cfg.params.sample_budget = 20000;
        const GridSpec map = load_map(cfg.map_path.string());
        std::string first;
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = scratch / "criterion7" / ("rep" + std::to_string(rep));
            write_report(run_experiment(cfg, map), dir, cfg.stem());
            const std::string text = read_or_empty(dir / (cfg.stem() + ".csv"));
            if (rep == 0) first = text;
            else if (text != first || text.empty()) ++csv_diffs;
        }
        ++configs;
    }

    int roundtrip_fail = 0;
    for (int i = 0; i < 100; ++i) {
        const GridShape shape = i % 4 == 3 ? GridShape{3 + i % 3, 4, 2 + i % 2, true}
                                           : GridShape{4 + i % 9, 3 + i % 7, 1, false};
        GridSpec spec = generate_map(shape, (shape.cells() * (i % 5)) / 10, 9000 + i);
        if (i % 3 == 1) spec.slip = 0.05 * (i % 7);
        if (i % 6 == 2) spec.goal_reward = 10.0 + i;
        const std::string text = serialize_map(spec);
        if (serialize_map(parse_map(text)) != text || !(parse_map(text) == spec)) ++roundtrip_fail;
    }

    int pgm_files = 0, pgm_bad = 0;
    for (const auto& entry : fs::recursive_directory_iterator(scratch)) {
        if (entry.path().extension() != ".pgm") continue;
        ++pgm_files;
        if (!testsupport::validate_pgm(testsupport::read_file(entry.path())).empty()) ++pgm_bad;
    }
    // A 3D export as well, one file per layer.
    const GridSpec cube = generate_map({4, 3, 3, true}, 6, 4);
    const GridWorld cw(cube);
    const auto mdp = cw.build_mdp(0.95);
    const MfptVector mu = solve_mfpt(induced_chain(mdp, value_iteration(mdp, {1e-8, 100000}).pi, 0.05), mdp.goal());
    const fs::path base = scratch / "criterion7" / "cube";
    landscape_export(mu, cube.shape, kDefaultLandscapeClip, base, cw.cell_states());
    for (int z = 0; z < 3; ++z) {
        ++pgm_files;
        const std::string text = read_or_empty(base.string() + "_z" + std::to_string(z) + ".pgm");
        if (!testsupport::validate_pgm(text, 4, 3).empty()) ++pgm_bad;
    }

    out.check(csv_diffs == 0, "CSV determinism");
    out.check(roundtrip_fail == 0, "map round trip");
    out.check(pgm_bad == 0 && pgm_files > 3, "PGM grammar");
    out.detail << "configs=" << configs << " csv_diffs=" << csv_diffs << " maps=100 roundtrip_failures="
               << roundtrip_fail << " pgm_files=" << pgm_files << " pgm_invalid=" << pgm_bad
               << " time_s=" << seconds_since(t0);
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7};

    const fs::path scratch = testsupport::scratch_dir("acceptance");
    const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
        {"MFPT correctness", criterion1},
        {"planner equivalence", criterion2},
        {"sample-efficiency ordering", [&](Verdict& o) { criterion3(o, scratch); }},
        {"wall-clock trade-off", [&](Verdict& o) { criterion4(o, scratch); }},
        {"landscape evolution", [&](Verdict& o) { criterion5(o, scratch); }},
        {"reduction identities", criterion6},
        {"determinism and formats", [&](Verdict& o) { criterion7(o, scratch); }},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.count(id)) continue;
        Verdict out;
        try {
            criteria[i].second(out);
        } catch (const std::exception& e) {
            out.check(false, std::string("exception: ") + e.what());
        }
        all = all && out.pass;
        std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
                  << "): " << out.detail.str() << std::endl;
    }
    return all ? 0 : 1;
}

#include "mfptrl/reachability.hpp"

#include "mfptrl/errors.hpp"
#include "mfptrl/linalg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace mfptrl {

ChainMatrix::ChainMatrix(std::vector<std::vector<ChainEntry>> rows) : rows_(std::move(rows)) {
    const int n = size();
    if (n < 1) throw InvalidModel("chain must have at least one state");
    for (int i = 0; i < n; ++i) {
        auto& r = rows_[i];
        std::erase_if(r, [](const ChainEntry& e) { return e.prob == 0.0; });
        std::sort(r.begin(), r.end(),
                  [](const ChainEntry& a, const ChainEntry& b) { return a.to < b.to; });
        double sum = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (r[j].to < 0 || r[j].to >= n)
                throw InvalidModel("chain target out of range in row " + std::to_string(i));
            if (j > 0 && r[j - 1].to == r[j].to)
                throw InvalidModel("duplicate chain target in row " + std::to_string(i));
            if (!(r[j].prob >= 0.0 && r[j].prob <= 1.0 + kRowSumTolerance))
                throw InvalidModel("chain probability outside [0,1] in row " + std::to_string(i));
            sum += r[j].prob;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            throw InvalidModel("chain row " + std::to_string(i) + " does not sum to 1");
    }
}

ChainMatrix ChainMatrix::from_dense(const std::vector<std::vector<double>>& p) {
    std::vector<std::vector<ChainEntry>> rows(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].size() != p.size()) throw ShapeMismatch("dense chain must be square");
        for (std::size_t k = 0; k < p[i].size(); ++k)
            if (p[i][k] != 0.0) rows[i].push_back({static_cast<int>(k), p[i][k]});
    }
    return ChainMatrix(std::move(rows));
}

double ChainMatrix::probability(int i, int k) const {
    for (const ChainEntry& e : rows_[i])
        if (e.to == k) return e.prob;
    return 0.0;
}

bool MfptVector::all_capped_except_goal() const {
    for (int i = 0; i < size(); ++i)
        if (i != goal && !capped[i]) return false;
    return true;
}

ChainMatrix induced_chain(const TabularMdp& mdp, const Policy& pi, double exploration_mix) {
    const int n = mdp.n_states();
    const int n_actions = mdp.n_actions();
    if (pi.size() != static_cast<std::size_t>(n))
        throw LengthMismatch("policy length does not match state count");
    if (!(exploration_mix >= 0.0 && exploration_mix < 1.0))
        throw InvalidModel("exploration_mix must lie in [0, 1)");

    const double uniform_weight = exploration_mix / n_actions;
    std::vector<std::vector<ChainEntry>> rows(n);
    std::vector<double> scratch(n, 0.0);
    std::vector<int> touched;
    for (int i = 0; i < n; ++i) {
        if (pi[i] < 0 || pi[i] >= n_actions)
            throw InvalidModel("policy action out of range at state " + std::to_string(i));
        touched.clear();
        auto add = [&](int a, double w) {
            for (const Outcome& o : mdp.row(a, i)) {
                if (scratch[o.next] == 0.0) touched.push_back(o.next);
                scratch[o.next] += w * o.prob;
            }
        };
        add(pi[i], 1.0 - exploration_mix);
        if (exploration_mix > 0.0)
            for (int a = 0; a < n_actions; ++a) add(a, uniform_weight);

        std::sort(touched.begin(), touched.end());
        auto& r = rows[i];
        r.reserve(touched.size());
        for (int k : touched) {
            r.push_back({k, scratch[k]});
            scratch[k] = 0.0;
        }
    }
    return ChainMatrix(std::move(rows));
}

namespace {

// States from which `targets` can be hit with positive probability (targets included).
std::vector<bool> backward_closure(const std::vector<std::vector<int>>& predecessors,
                                   std::vector<bool> marked) {
    std::vector<int> stack;
    for (std::size_t i = 0; i < marked.size(); ++i)
        if (marked[i]) stack.push_back(static_cast<int>(i));
    while (!stack.empty()) {
        const int k = stack.back();
        stack.pop_back();
        for (int p : predecessors[k]) {
            if (!marked[p]) {
                marked[p] = true;
                stack.push_back(p);
            }
        }
    }
    return marked;
}

// Chooses the banded elimination when it is clearly cheaper than the dense one.
bool prefer_band(std::size_t n, std::size_t kl, std::size_t ku) {
    return n > 64 && (2 * kl + ku + 1) * 4 < n;
}

} // namespace

MfptVector solve_mfpt(const ChainMatrix& chain, int goal, double mu_cap) {
    const int n = chain.size();
    if (goal < 0 || goal >= n) throw InvalidModel("goal index out of range");
    if (!(mu_cap > 0.0)) throw InvalidModel("mu_cap must be positive");

    MfptVector out;
    out.goal = goal;
    out.mu_cap = mu_cap;
    out.mu.assign(n, mu_cap);
    out.capped.assign(n, true);
    out.mu[goal] = 0.0;
    out.capped[goal] = false;

    std::vector<std::vector<int>> predecessors(n);
    for (int i = 0; i < n; ++i)
        for (const ChainEntry& e : chain.row(i))
            if (e.to != i) predecessors[e.to].push_back(i);

    std::vector<bool> seed(n, false);
    seed[goal] = true;
    const std::vector<bool> reaches_goal = backward_closure(predecessors, seed);
    std::vector<bool> trapped(n, false);
    for (int i = 0; i < n; ++i) trapped[i] = !reaches_goal[i];
    const std::vector<bool> infinite = backward_closure(predecessors, trapped);

    // Goal-excluded system over states with finite passage time, in index order.
    std::vector<int> index(n, -1);
    std::vector<int> states;
    for (int i = 0; i < n; ++i) {
        if (i != goal && !infinite[i]) {
            index[i] = static_cast<int>(states.size());
            states.push_back(i);
        }
    }
    const std::size_t m = states.size();
    if (m == 0) return out;

    std::size_t kl = 0, ku = 0;
    for (std::size_t r = 0; r < m; ++r) {
        for (const ChainEntry& e : chain.row(states[r])) {
            const int c = index[e.to];
            if (c < 0) continue;
            const auto cu = static_cast<std::size_t>(c);
            if (cu < r) kl = std::max(kl, r - cu);
            else ku = std::max(ku, cu - r);
        }
    }

    // Rows read sum_{k != goal} p_ik mu_k - mu_i = -1.
    const std::vector<double> rhs(m, -1.0);
    std::vector<double> mu;
    bool singular = false;
    if (prefer_band(m, kl, ku)) {
        BandMatrix a(m, kl, ku);
        for (std::size_t r = 0; r < m; ++r) {
            a.at(r, r) = -1.0;
            for (const ChainEntry& e : chain.row(states[r]))
                if (index[e.to] >= 0) a.at(r, static_cast<std::size_t>(index[e.to])) += e.prob;
        }
        BandLu lu(std::move(a));
        singular = lu.singular();
        if (!singular) mu = lu.solve(rhs);
    } else {
        DenseMatrix a(m, m);
        for (std::size_t r = 0; r < m; ++r) {
            a(r, r) = -1.0;
            for (const ChainEntry& e : chain.row(states[r]))
                if (index[e.to] >= 0) a(r, static_cast<std::size_t>(index[e.to])) += e.prob;
        }
        DenseLu lu(std::move(a));
        singular = lu.singular();
        if (!singular) mu = lu.solve(rhs);
    }
    if (singular) return out;

    for (std::size_t r = 0; r < m; ++r) {
        const double value = mu[r];
        if (std::isfinite(value) && value <= mu_cap) {
            out.mu[states[r]] = value;
            out.capped[states[r]] = false;
        }
    }
    return out;
}

double mfpt_residual(const ChainMatrix& chain, const MfptVector& mfpt) {
    double worst = 0.0;
    for (int i = 0; i < chain.size(); ++i) {
        if (i == mfpt.goal || mfpt.capped[i]) continue;
        double rhs = 1.0;
        for (const ChainEntry& e : chain.row(i))
            if (e.to != mfpt.goal) rhs += e.prob * mfpt.mu[e.to];
        worst = std::max(worst, std::abs(rhs - mfpt.mu[i]));
    }
    return worst;
}

PriorityOrder priority_order(const MfptVector& mfpt) {
    PriorityOrder order(mfpt.mu.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mfpt.mu[a] < mfpt.mu[b]; });
    return order;
}

namespace {

// Walker alias table for O(1) sampling of one chain row.
struct AliasRow {
    std::vector<int> target;
    std::vector<double> threshold;
    std::vector<int> alias;

    explicit AliasRow(std::span<const ChainEntry> row) {
        const std::size_t k = row.size();
        target.resize(k);
        threshold.resize(k);
        alias.assign(k, 0);
        std::vector<double> scaled(k);
        double total = 0.0;
        for (const ChainEntry& e : row) total += e.prob;
        std::vector<std::size_t> small, large;
        for (std::size_t j = 0; j < k; ++j) {
            target[j] = row[j].to;
            scaled[j] = row[j].prob / total * static_cast<double>(k);
            (scaled[j] < 1.0 ? small : large).push_back(j);
        }
        while (!small.empty() && !large.empty()) {
            const std::size_t s = small.back();
            small.pop_back();
            const std::size_t l = large.back();
            threshold[s] = scaled[s];
            alias[s] = static_cast<int>(l);
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::size_t j : small) threshold[j] = 1.0;
        for (std::size_t j : large) threshold[j] = 1.0;
    }

    int sample(std::mt19937_64& rng) const {
        const std::size_t k = target.size();
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * static_cast<double>(k);
        std::size_t j = std::min(static_cast<std::size_t>(u), k - 1);
        const double frac = u - static_cast<double>(j);
        return frac < threshold[j] ? target[j] : target[alias[j]];
    }
};

} // namespace

MonteCarloMfpt mfpt_monte_carlo(const ChainMatrix& chain, int goal, long episodes, long horizon,
                                std::uint64_t seed) {
    if (episodes < 1 || horizon < 1)
        throw InvalidModel("episodes and horizon must be at least 1");
    const int n = chain.size();
    if (goal < 0 || goal >= n) throw InvalidModel("goal index out of range");

    std::vector<AliasRow> rows;
    rows.reserve(n);
    for (int i = 0; i < n; ++i) rows.emplace_back(chain.row(i));

    std::mt19937_64 rng(seed);
    MonteCarloMfpt out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (int start = 0; start < n; ++start) {
        if (start == goal) continue;
        double sum = 0.0, sum_sq = 0.0;
        for (long e = 0; e < episodes; ++e) {
            int state = start;
            long steps = 0;
            while (state != goal && steps < horizon) {
                state = rows[state].sample(rng);
                ++steps;
            }
            const auto t = static_cast<double>(steps);
            sum += t;
            sum_sq += t * t;
        }
        const auto count = static_cast<double>(episodes);
        const double mean = sum / count;
        out.mean[start] = mean;
        if (episodes > 1) {
            const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
            out.std_error[start] = std::sqrt(var / count);
        }
    }
    return out;
}

int landscape_pixel(double mu, double clip) {
    if (!(clip > 0.0)) throw InvalidModel("landscape clip must be positive");
    const double v = std::isnan(mu) ? clip : std::clamp(mu, 0.0, clip);
    return static_cast<int>(std::lround(255.0 * v / clip));
}

namespace {

std::string format_real(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open '" + p.string() + "' for writing");
    return f;
}

void finish(std::ofstream& f, const std::filesystem::path& p) {
    f.flush();
    if (!f) throw IoFailure("write to '" + p.string() + "' failed");
}

} // namespace

void landscape_export(const MfptVector& mfpt, const GridShape& shape, double clip,
                      const std::filesystem::path& base, std::span<const int> cell_state) {
    if (shape.width < 1 || shape.height < 1 || shape.depth < 1 ||
        (!shape.three_d && shape.depth != 1))
        throw ShapeMismatch("invalid grid shape");
    const int cells = shape.cells();
    std::vector<int> mapping;
    if (cell_state.empty()) {
        if (cells != mfpt.size())
            throw ShapeMismatch("grid has " + std::to_string(cells) + " cells but " +
                                std::to_string(mfpt.size()) + " states");
        mapping.resize(cells);
        std::iota(mapping.begin(), mapping.end(), 0);
    } else {
        if (static_cast<int>(cell_state.size()) != cells)
            throw ShapeMismatch("cell map size does not match grid shape");
        mapping.assign(cell_state.begin(), cell_state.end());
        for (int s : mapping)
            if (s >= mfpt.size()) throw ShapeMismatch("cell map refers to unknown state");
    }
    if (!(clip > 0.0)) throw InvalidModel("landscape clip must be positive");

    const int layer_cells = shape.width * shape.height;
    for (int z = 0; z < shape.depth; ++z) {
        std::filesystem::path pgm = base;
        pgm += shape.three_d ? "_z" + std::to_string(z) + ".pgm" : std::string(".pgm");
        auto f = open_for_write(pgm);
        f << "P2\n" << shape.width << ' ' << shape.height << "\n255\n";
        for (int y = 0; y < shape.height; ++y) {
            for (int x = 0; x < shape.width; ++x) {
                const int s = mapping[z * layer_cells + y * shape.width + x];
                const int px = s < 0 ? 255 : landscape_pixel(mfpt.mu[s], clip);
                if (x > 0) f << ' ';
                f << px;
            }
            f << '\n';
        }
        finish(f, pgm);
    }

    std::filesystem::path csv = base;
    csv += ".csv";
    auto f = open_for_write(csv);
    f << "state,mu,capped\n";
    for (int s = 0; s < mfpt.size(); ++s)
        f << s << ',' << format_real(mfpt.mu[s]) << ',' << (mfpt.capped[s] ? 1 : 0) << '\n';
    finish(f, csv);
}

} // namespace mfptrl

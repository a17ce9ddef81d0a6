#include "mfptrl/errors.hpp"
#include "mfptrl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfptrl {

LearnedModel::LearnedModel(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      visits_(static_cast<std::size_t>(n_states) * n_actions, 0),
      successors_(static_cast<std::size_t>(n_states) * n_actions) {
    if (n_states < 1 || n_actions < 1) throw InvalidModel("model dimensions must be positive");
}

LearnedModel LearnedModel::exact(const TabularMdp& mdp, long resolution) {
    if (resolution < 1) throw InvalidModel("resolution must be at least 1");
    LearnedModel m(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            for (const Outcome& o : mdp.row(a, s)) {
                const double scaled = o.prob * static_cast<double>(resolution);
                const long c = std::lround(scaled);
                if (std::abs(scaled - static_cast<double>(c)) > 1e-9)
                    throw InvalidModel("transition probability not representable at resolution " +
                                       std::to_string(resolution));
                for (long k = 0; k < c; ++k) m.update({s, a, o.reward, o.next});
            }
        }
    }
    return m;
}

void LearnedModel::update(const Experience& e) {
    if (e.s < 0 || e.s >= n_states_ || e.s_next < 0 || e.s_next >= n_states_ || e.a < 0 ||
        e.a >= n_actions_)
        throw InvalidModel("experience indices out of range");
    const std::size_t i = index(e.s, e.a);
    if (visits_[i] == 0) observed_.emplace_back(e.s, e.a);
    ++visits_[i];
    auto& succ = successors_[i];
    auto it = std::lower_bound(succ.begin(), succ.end(), e.s_next,
                               [](const Successor& x, int next) { return x.next < next; });
    if (it == succ.end() || it->next != e.s_next) it = succ.insert(it, Successor{e.s_next, 0, 0.0});
    ++it->count;
    it->reward_sum += e.r;
}

long LearnedModel::count(int s, int a, int next) const {
    for (const Successor& x : successors(s, a))
        if (x.next == next) return x.count;
    return 0;
}

double LearnedModel::reward_sum(int s, int a, int next) const {
    for (const Successor& x : successors(s, a))
        if (x.next == next) return x.reward_sum;
    return 0.0;
}

double LearnedModel::t_hat(int s, int a, int next) const {
    const long v = visits(s, a);
    if (v == 0) return next == s ? 1.0 : 0.0;
    return static_cast<double>(count(s, a, next)) / static_cast<double>(v);
}

double LearnedModel::r_hat(int s, int a, int next) const {
    for (const Successor& x : successors(s, a))
        if (x.next == next) return x.reward_sum / static_cast<double>(x.count);
    return 0.0;
}

const LearnedModel::Successor& LearnedModel::sample(int s, int a, Rng& rng) const {
    const long v = visits(s, a);
    if (v == 0) throw InvalidModel("cannot sample an unvisited state-action pair");
    std::uniform_int_distribution<long> pick(0, v - 1);
    long k = pick(rng);
    const auto& succ = successors_[index(s, a)];
    for (const Successor& x : succ) {
        if (k < x.count) return x;
        k -= x.count;
    }
    return succ.back();
}

TabularMdp LearnedModel::to_mdp(int goal, double discount) const {
    std::vector<std::vector<Outcome>> rows(static_cast<std::size_t>(n_states_) * n_actions_);
    for (int a = 0; a < n_actions_; ++a) {
        for (int s = 0; s < n_states_; ++s) {
            auto& row = rows[static_cast<std::size_t>(a) * n_states_ + s];
            const std::size_t i = index(s, a);
            if (visits_[i] == 0) {
                row.push_back({s, 1.0, 0.0});
                continue;
            }
            const auto total = static_cast<double>(visits_[i]);
            row.reserve(successors_[i].size());
            for (const Successor& x : successors_[i])
                row.push_back({x.next, static_cast<double>(x.count) / total,
                               x.reward_sum / static_cast<double>(x.count)});
        }
    }
    return TabularMdp(n_states_, n_actions_, std::move(rows), goal, discount);
}

} // namespace mfptrl

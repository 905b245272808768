#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "cfc/a2c.hpp"
#include "cfc/env.hpp"
#include "cfc/metrics.hpp"
#include "cfc/net.hpp"

namespace cfc {

struct SearchNode;

/// Per-(state, action) statistics. reward/done cache the deterministic
/// environment transition along this edge; Q is the running mean of the
/// discounted returns backed through it.
struct SearchEdge {
    int action = 0; // flat index
    double prior = 0.0;
    double q = 0.0;
    int n = 0;
    double reward = 0.0;
    bool done = false;
    std::unique_ptr<SearchNode> child;
};

struct SearchNode {
    EpisodeState state;
    std::vector<SearchEdge> edges; // ascending action order, legal actions only
    bool expanded = false;
};

struct MCTSConfig {
    int n_sim = 200;
    double c_puct = 1.5;
    int t_max = -1;
    int samples_per_iteration = 512;
    int iterations = 20;
    double lr = 1e-3;
    int minibatch = 32;
    int train_passes = 2;
    int patience = 3;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_sim < 1) throw ValidationError("n_sim must be >= 1");
        if (!(c_puct > 0)) throw ValidationError("c_puct must be > 0");
        if (iterations < 0) throw ValidationError("iterations must be >= 0");
        if (samples_per_iteration < 1) throw ValidationError("samples_per_iteration must be >= 1");
        if (!(lr > 0)) throw ValidationError("lr must be > 0");
    }
};

struct SearchLabel {
    std::vector<double> state;
    std::vector<std::uint8_t> legal;
    std::vector<double> pi; // empirical search policy over all p+K actions
    double z = 0.0;
};

/// Visit-log record consumed by the rule extractor: one line per root decision.
struct VisitRecord {
    int sample = 0;
    int step = 0;
    std::vector<int> acquired;
    std::vector<double> acquired_values; // raw dataset values of `acquired`
    int chosen = 0;                      // flat action index
    double chosen_value = 0.0;           // raw value of the acquired feature, 0 for classify
    std::vector<int> n_counts;           // per flat action, 0 where unvisited
    std::vector<double> pi;
};

/// One-step value bootstrap Q(s,a) = r + gamma * V(s').
inline double q_bootstrap(double r, double gamma, double v_next) {
    if (!std::isfinite(r) || !std::isfinite(v_next))
        throw ValidationError("q_bootstrap: non-finite input");
    return r + gamma * v_next;
}

/// PUCT selection: argmax_a Q + c * prior * sqrt(sum_b N) / (N+1), ties to the
/// lowest flat action index. With zero total visits the exploration term
/// vanishes for every action, so the first visit goes to the highest prior.
inline int puct_select(const SearchNode& node, double c) {
    if (!node.expanded || node.edges.empty())
        throw std::logic_error("puct_select: node not expanded");
    long total = 0;
    for (const auto& e : node.edges) total += e.n;
    int best = 0;
    if (total == 0) {
        for (std::size_t i = 1; i < node.edges.size(); ++i)
            if (node.edges[i].prior > node.edges[best].prior) best = static_cast<int>(i);
        return best;
    }
    double sq = std::sqrt(static_cast<double>(total));
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        const auto& e = node.edges[i];
        double score = e.q + c * e.prior * sq / (e.n + 1);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(i);
        }
    }
    return best;
}

/// Populate edges with network priors and cached transitions; returns v(s).
inline double expand_and_evaluate(SearchNode& node, const Network& net, const Dataset& ds,
                                  const RewardConfig& rc, int t_max) {
    if (node.expanded) throw std::logic_error("node already expanded");
    auto legal = legal_actions(node.state, ds, t_max);
    auto pv = forward(net, encode(node.state), legal);
    for (int a = 0; a < static_cast<int>(legal.size()); ++a) {
        if (!legal[a]) continue;
        SearchEdge e;
        e.action = a;
        e.prior = pv.probs[a];
        auto sr = step(node.state, Action::from_flat(a, ds.p), ds, rc);
        e.reward = sr.reward;
        e.done = sr.done;
        node.edges.push_back(std::move(e));
    }
    node.expanded = true;
    return pv.value;
}

struct PathEntry {
    SearchNode* node;
    int edge_index;
};

/// Leaf-to-root backup of the discounted return G = r + gamma*G, starting
/// from the leaf value; every edge keeps the running mean of its G values.
inline void backup(const std::vector<PathEntry>& path, double leaf_value, double gamma) {
    double g = leaf_value;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        auto& e = it->node->edges[it->edge_index];
        g = e.reward + gamma * g;
        e.n += 1;
        e.q += (g - e.q) / e.n;
    }
}

namespace detail {

inline void simulate(SearchNode& root, const Network& net, const Dataset& ds,
                     const RewardConfig& rc, const MCTSConfig& cfg, int t_max) {
    std::vector<PathEntry> path;
    SearchNode* node = &root;
    double leaf_value;
    for (;;) {
        if (!node->expanded) {
            leaf_value = expand_and_evaluate(*node, net, ds, rc, t_max);
            break;
        }
        int ei = puct_select(*node, cfg.c_puct);
        path.push_back({node, ei});
        auto& e = node->edges[ei];
        if (e.done) {
            leaf_value = 0.0; // terminal reward already sits on the edge
            break;
        }
        if (!e.child) {
            auto sr = step(node->state, Action::from_flat(e.action, ds.p), ds, rc);
            e.child = std::make_unique<SearchNode>();
            e.child->state = std::move(sr.next);
        }
        node = e.child.get();
    }
    backup(path, leaf_value, rc.gamma);
}

} // namespace detail

struct MoveResult {
    int action = 0;          // flat index, argmax visit count
    std::vector<double> pi;  // visit distribution over all p+K actions
    std::vector<int> n_counts;
};

/// Run n_sim simulations from the root and pick the most-visited action.
inline MoveResult search_move(SearchNode& root, const Network& net, const Dataset& ds,
                              const RewardConfig& rc, const MCTSConfig& cfg) {
    int t_max = cfg.t_max < 0 ? ds.p : cfg.t_max;
    if (!root.expanded) expand_and_evaluate(root, net, ds, rc, t_max);
    for (int s = 0; s < cfg.n_sim; ++s) detail::simulate(root, net, ds, rc, cfg, t_max);

    MoveResult mr;
    mr.pi.assign(ds.p + ds.class_count, 0.0);
    mr.n_counts.assign(ds.p + ds.class_count, 0);
    long total = 0;
    int best = -1;
    for (const auto& e : root.edges) {
        total += e.n;
        mr.n_counts[e.action] = e.n;
        if (best < 0 || e.n > mr.n_counts[best]) best = e.action;
    }
    for (const auto& e : root.edges)
        mr.pi[e.action] = total > 0 ? static_cast<double>(e.n) / total : 0.0;
    mr.action = best;
    return mr;
}

struct MctsEpisode {
    std::vector<SearchLabel> labels;
    std::vector<int> trajectory; // flat actions in order
    std::vector<VisitRecord> records;
};

/// Per-sample search episode: repeatedly search, take the most-visited
/// action, and re-root at the resulting child, reusing the subtree. Emits one
/// label per visited root with the one-step bootstrapped value target.
inline MctsEpisode episode_with_mcts(const Dataset& ds, int row, const Network& net,
                                     const RewardConfig& rc, const MCTSConfig& cfg) {
    int t_max = cfg.t_max < 0 ? ds.p : cfg.t_max;
    MctsEpisode ep;
    auto root = std::make_unique<SearchNode>();
    root->state = reset(ds, row);
    expand_and_evaluate(*root, net, ds, rc, t_max);

    int step_ord = 0;
    for (;;) {
        auto mr = search_move(*root, net, ds, rc, cfg);
        auto sr = step(root->state, Action::from_flat(mr.action, ds.p), ds, rc);

        SearchLabel lab;
        lab.state = encode(root->state);
        lab.legal = legal_actions(root->state, ds, t_max);
        lab.pi = mr.pi;
        if (sr.done) {
            lab.z = sr.reward;
        } else {
            auto next_legal = legal_actions(sr.next, ds, t_max);
            double v_next = forward(net, encode(sr.next), next_legal).value;
            lab.z = q_bootstrap(sr.reward, rc.gamma, v_next);
        }
        ep.labels.push_back(std::move(lab));

        VisitRecord rec;
        rec.sample = row;
        rec.step = step_ord++;
        rec.acquired = root->state.acquired;
        for (int f : rec.acquired) rec.acquired_values.push_back(ds.value(row, f));
        rec.chosen = mr.action;
        if (mr.action < ds.p) rec.chosen_value = ds.value(row, mr.action);
        rec.n_counts = mr.n_counts;
        rec.pi = mr.pi;
        ep.records.push_back(std::move(rec));
        ep.trajectory.push_back(mr.action);

        if (sr.done) break;

        // re-root at the chosen child, keeping its subtree statistics
        std::unique_ptr<SearchNode> next_root;
        for (auto& e : root->edges)
            if (e.action == mr.action) next_root = std::move(e.child);
        if (!next_root) {
            next_root = std::make_unique<SearchNode>();
            next_root->state = std::move(sr.next);
        }
        root = std::move(next_root);
        if (!root->expanded) expand_and_evaluate(*root, net, ds, rc, t_max);
    }
    return ep;
}

struct IterRecord {
    int iteration = 0;
    double mean_loss = 0.0;
    double val_accuracy = 0.0;
    double val_mean_cost = 0.0;
    double objective = 0.0;
};

struct ImproveResult {
    Network net;
    std::vector<IterRecord> log;
};

/// Iterative policy improvement: collect search labels on sampled training
/// rows, distill them into the network, and keep the best-validation
/// checkpoint. Stops early after `patience` iterations without improvement.
inline ImproveResult improve(const Network& init, const Dataset& ds_train,
                             const Dataset& ds_val, const RewardConfig& rc,
                             const MCTSConfig& cfg) {
    cfg.validate();
    int t_max = cfg.t_max < 0 ? ds_train.p : cfg.t_max;
    ImproveResult result;
    result.net = init;
    if (cfg.iterations == 0) return result;

    Network net = init;
    AdamState adam;
    std::mt19937_64 rng = make_rng(cfg.seed, "mcts");
    double best_obj = evaluate(init, ds_val, rc, t_max).objective;
    int no_improve = 0;

    std::vector<int> rows(ds_train.n);
    for (int i = 0; i < ds_train.n; ++i) rows[i] = i;

    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        std::shuffle(rows.begin(), rows.end(), rng);
        int take = std::min(ds_train.n, cfg.samples_per_iteration);

        std::vector<MctsSample> samples;
        for (int i = 0; i < take; ++i) {
            auto ep = episode_with_mcts(ds_train, rows[i], net, rc, cfg);
            for (auto& lab : ep.labels) {
                MctsSample smp;
                smp.state = std::move(lab.state);
                smp.legal = std::move(lab.legal);
                smp.pi_target = std::move(lab.pi);
                smp.z = lab.z;
                samples.push_back(std::move(smp));
            }
        }

        double loss_sum = 0.0;
        long loss_count = 0;
        std::vector<int> order(samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        for (int pass = 0; pass < cfg.train_passes; ++pass) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.minibatch)) {
                std::vector<MctsSample> mb;
                for (std::size_t i = start;
                     i < std::min(order.size(), start + cfg.minibatch); ++i)
                    mb.push_back(samples[order[i]]);
                auto g = mcts_gradient(net, mb);
                if (!std::isfinite(g.loss) || g.loss / std::max<std::size_t>(1, mb.size()) > 1e6)
                    throw DivergenceError("mcts improvement diverged");
                apply_update(net, g.grad, adam, cfg.lr);
                loss_sum += g.loss;
                loss_count += static_cast<long>(mb.size());
            }
        }

        auto rep = evaluate(net, ds_val, rc, t_max);
        IterRecord rec;
        rec.iteration = iter;
        rec.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
        rec.val_accuracy = rep.accuracy;
        rec.val_mean_cost = rep.mean_cost;
        rec.objective = rep.objective;
        result.log.push_back(rec);

        if (rep.objective > best_obj + 1e-12) {
            best_obj = rep.objective;
            result.net = net;
            no_improve = 0;
        } else if (++no_improve >= cfg.patience) {
            break;
        }
    }
    return result;
}

} // namespace cfc

#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "cfc/env.hpp"
#include "cfc/net.hpp"

namespace cfc {

struct EvalReport {
    double accuracy = 0.0;
    double mean_cost = 0.0;       // cost units, unscaled by lambda
    std::optional<double> auc;    // binary tasks only
    double objective = 0.0;       // accuracy - lambda * mean_cost
    double mean_features = 0.0;
    std::vector<long> confusion;  // K*K row-major, [true][predicted]
};

/// Area under the ROC curve via the Mann-Whitney rank statistic; ties count 0.5.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ValidationError("auc: size mismatch");
    long n_pos = std::count(labels.begin(), labels.end(), 1);
    long n_neg = static_cast<long>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: both classes required");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * n_neg);
}

inline int greedy_action(const PolicyValue& pv, const std::vector<std::uint8_t>& legal) {
    int best = -1;
    for (std::size_t j = 0; j < pv.probs.size(); ++j)
        if (legal[j] && (best < 0 || pv.probs[j] > pv.probs[best])) best = static_cast<int>(j);
    return best;
}

/// Deterministic greedy evaluation: per-row episodes, accuracy from the
/// Classify actions, cost from the acquired set. For binary tasks the AUC
/// score is the renormalized terminal-action probability of the positive
/// class at the policy's own stopping state.
inline EvalReport evaluate(const Network& net, const Dataset& ds, const RewardConfig& rc,
                           int t_max = -1, int positive_class = -1) {
    if (net.p != ds.p || net.K != ds.class_count)
        throw ValidationError("network/dataset dimension mismatch");
    if (t_max < 0) t_max = ds.p;
    if (positive_class < 0)
        positive_class = rc.minority_class >= 0 ? rc.minority_class : 1;

    EvalReport rep;
    rep.confusion.assign(static_cast<std::size_t>(ds.class_count) * ds.class_count, 0);
    std::vector<double> scores;
    std::vector<int> bin_labels;
    long correct = 0;
    double total_cost = 0.0, total_feats = 0.0;

    for (int row = 0; row < ds.n; ++row) {
        EpisodeState s = reset(ds, row);
        while (true) {
            auto legal = legal_actions(s, ds, t_max);
            auto pv = forward(net, encode(s), legal);
            int a = greedy_action(pv, legal);
            Action act = Action::from_flat(a, ds.p);
            auto sr = step(s, act, ds, rc);
            if (sr.done) {
                int pred = act.index;
                if (pred == ds.y[row]) ++correct;
                rep.confusion[static_cast<std::size_t>(ds.y[row]) * ds.class_count + pred]++;
                total_cost += s.accumulated_cost;
                total_feats += s.t;
                if (ds.class_count == 2) {
                    double p_pos = pv.probs[ds.p + positive_class];
                    double p_both = pv.probs[ds.p] + pv.probs[ds.p + 1];
                    scores.push_back(p_both > 0 ? p_pos / p_both : 0.5);
                    bin_labels.push_back(ds.y[row] == positive_class ? 1 : 0);
                }
                break;
            }
            s = std::move(sr.next);
        }
    }

    rep.accuracy = static_cast<double>(correct) / ds.n;
    rep.mean_cost = total_cost / ds.n;
    rep.mean_features = total_feats / ds.n;
    rep.objective = rep.accuracy - rc.lambda * rep.mean_cost;
    if (ds.class_count == 2) {
        bool both = std::count(bin_labels.begin(), bin_labels.end(), 1) > 0 &&
                    std::count(bin_labels.begin(), bin_labels.end(), 0) > 0;
        if (both) rep.auc = auc(scores, bin_labels);
    }
    return rep;
}

} // namespace cfc

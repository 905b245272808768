#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cfc/dataset.hpp"

namespace cfc {

/// Reward shaping for the per-sample MDP. With minority_class < 0 the task is
/// treated as balanced and terminal rewards are +-1; otherwise majority-class
/// terminal rewards are scaled by delta.
struct RewardConfig {
    double lambda = 0.01;   // cost scale
    double delta = 1.0;     // majority-class terminal weight, in [0,1]
    double gamma = 1.0;     // discount
    int minority_class = -1;

    void validate() const {
        if (lambda < 0) throw ValidationError("lambda must be >= 0");
        if (delta < 0 || delta > 1) throw ValidationError("delta must lie in [0,1]");
        if (!(gamma > 0 && gamma <= 1)) throw ValidationError("gamma must lie in (0,1]");
    }
};

/// Flat action encoding: [0,p) acquire feature i, [p,p+K) classify class k.
struct Action {
    enum class Kind { Acquire, Classify };
    Kind kind;
    int index; // feature index or class index

    static Action acquire(int feature) { return {Kind::Acquire, feature}; }
    static Action classify(int cls) { return {Kind::Classify, cls}; }

    int flat(int p) const { return kind == Kind::Acquire ? index : p + index; }

    static Action from_flat(int f, int p) {
        return f < p ? acquire(f) : classify(f - p);
    }

    bool operator==(const Action& o) const = default;
};

struct EpisodeState {
    int row = 0;
    std::vector<int> acquired;      // sorted feature indices, |acquired| = t
    std::vector<double> indicator;  // p-vector of {0,1}
    std::vector<double> values;     // p-vector, 0 where unacquired
    double accumulated_cost = 0.0;
    int t = 0;
};

inline EpisodeState reset(const Dataset& ds, int row) {
    if (row < 0 || row >= ds.n) throw ValidationError("row index out of range");
    EpisodeState s;
    s.row = row;
    s.indicator.assign(ds.p, 0.0);
    s.values.assign(ds.p, 0.0);
    return s;
}

/// State encoding [I_t || x_t], length 2p. The indicator half distinguishes an
/// acquired zero value from an unacquired feature.
inline std::vector<double> encode(const EpisodeState& s) {
    std::vector<double> out;
    out.reserve(s.indicator.size() * 2);
    out.insert(out.end(), s.indicator.begin(), s.indicator.end());
    out.insert(out.end(), s.values.begin(), s.values.end());
    return out;
}

/// Mask of length p+K. Acquire(i) is legal iff i is unacquired and present for
/// this row; Classify is always legal; past t_max only Classify remains.
inline std::vector<std::uint8_t> legal_actions(const EpisodeState& s, const Dataset& ds,
                                               int t_max) {
    std::vector<std::uint8_t> legal(ds.p + ds.class_count, 0);
    bool horizon = t_max >= 0 && s.t >= t_max;
    if (!horizon) {
        for (int i = 0; i < ds.p; ++i)
            legal[i] = (s.indicator[i] == 0.0 && ds.present(s.row, i)) ? 1 : 0;
    }
    for (int k = 0; k < ds.class_count; ++k) legal[ds.p + k] = 1;
    return legal;
}

/// Terminal reward per the unbalanced scheme: minority samples score +-1,
/// majority samples +-delta; balanced mode scores +-1 for every sample.
inline double terminal_reward(int predicted, int label, const RewardConfig& rc) {
    double w = 1.0;
    if (rc.minority_class >= 0 && label != rc.minority_class) w = rc.delta;
    return predicted == label ? w : -w;
}

struct StepResult {
    EpisodeState next;
    double reward = 0.0;
    bool done = false;
};

/// Deterministic transition. Acquire adds the feature, pays -lambda*cost;
/// Classify terminates with the terminal reward.
inline StepResult step(const EpisodeState& s, const Action& a, const Dataset& ds,
                       const RewardConfig& rc) {
    StepResult r;
    if (a.kind == Action::Kind::Acquire) {
        int i = a.index;
        if (i < 0 || i >= ds.p || s.indicator[i] != 0.0 || !ds.present(s.row, i))
            throw std::logic_error("illegal acquire action");
        r.next = s;
        r.next.acquired.insert(
            std::lower_bound(r.next.acquired.begin(), r.next.acquired.end(), i), i);
        r.next.indicator[i] = 1.0;
        r.next.values[i] = ds.value(s.row, i);
        r.next.accumulated_cost += ds.costs[i];
        r.next.t = s.t + 1;
        r.reward = -rc.lambda * ds.costs[i];
        r.done = false;
    } else {
        if (a.index < 0 || a.index >= ds.class_count)
            throw std::logic_error("illegal classify action");
        r.next = s;
        r.reward = terminal_reward(a.index, ds.y[s.row], rc);
        r.done = true;
    }
    return r;
}

/// #minority / #majority for a binary dataset, clamped to [0,1].
inline double imbalance_ratio(const Dataset& ds, int minority) {
    if (ds.class_count != 2) throw ValidationError("imbalance_ratio requires a binary dataset");
    int cmin = 0, cmaj = 0;
    for (int label : ds.y) (label == minority ? cmin : cmaj)++;
    if (cmin == 0 || cmaj == 0) throw ValidationError("both classes must be present");
    return std::min(1.0, static_cast<double>(cmin) / cmaj);
}

} // namespace cfc

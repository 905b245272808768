#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "cfc/env.hpp"
#include "cfc/metrics.hpp"
#include "cfc/net.hpp"

namespace cfc {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Transition {
    std::vector<double> state;
    std::vector<std::uint8_t> legal;
    int action = 0; // flat index
    double reward = 0.0;
    std::vector<double> next_state;
    std::vector<std::uint8_t> next_legal;
    bool done = false;
};

struct A2CConfig {
    int epochs = 200;
    double lr = 1e-3;
    double entropy_weight = 0.01;
    double value_loss_weight = 1.0;
    RewardConfig reward;
    int t_max = -1; // -1: all features
    std::uint64_t seed = 0;
    int eval_every = 5;
    int hidden = 256;

    void validate() const {
        if (epochs < 0) throw ValidationError("epochs must be >= 0");
        if (!(lr > 0)) throw ValidationError("lr must be > 0");
        if (entropy_weight < 0) throw ValidationError("entropy_weight must be >= 0");
        if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
        reward.validate();
    }
};

enum class RolloutMode { Stochastic, Greedy };

namespace detail {

inline int sample_action(const std::vector<double>& probs,
                         const std::vector<std::uint8_t>& legal, std::mt19937_64& rng) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    int last_legal = -1;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (!legal[j]) continue;
        last_legal = static_cast<int>(j);
        acc += probs[j];
        if (u < acc) return last_legal;
    }
    return last_legal; // numeric slack on the final bucket
}

} // namespace detail

/// One on-policy episode. Stochastic mode samples from the masked policy;
/// greedy mode takes the argmax with lowest-index tie-break.
inline std::vector<Transition> run_episode(const Dataset& ds, int row, const Network& net,
                                           const RewardConfig& rc, int t_max,
                                           std::mt19937_64& rng, RolloutMode mode) {
    if (t_max < 0) t_max = ds.p;
    std::vector<Transition> episode;
    EpisodeState s = reset(ds, row);
    while (true) {
        Transition tr;
        tr.state = encode(s);
        tr.legal = legal_actions(s, ds, t_max);
        auto pv = forward(net, tr.state, tr.legal);
        tr.action = mode == RolloutMode::Greedy ? greedy_action(pv, tr.legal)
                                                : detail::sample_action(pv.probs, tr.legal, rng);
        auto sr = step(s, Action::from_flat(tr.action, ds.p), ds, rc);
        tr.reward = sr.reward;
        tr.done = sr.done;
        tr.next_state = encode(sr.next);
        tr.next_legal = legal_actions(sr.next, ds, t_max);
        episode.push_back(std::move(tr));
        if (sr.done) break;
        s = std::move(sr.next);
    }
    return episode;
}

/// TD errors delta_t = r_t + gamma*v(s_{t+1})*(1-done) - v(s_t) under the
/// current network.
inline std::vector<double> td_errors(const std::vector<Transition>& episode, const Network& net,
                                     double gamma) {
    if (episode.empty()) throw ValidationError("td_errors: empty episode");
    std::vector<double> deltas;
    deltas.reserve(episode.size());
    for (const auto& tr : episode) {
        double v = forward(net, tr.state, tr.legal).value;
        double v_next = tr.done ? 0.0 : forward(net, tr.next_state, tr.next_legal).value;
        deltas.push_back(tr.reward + gamma * v_next - v);
    }
    return deltas;
}

struct EpochRecord {
    int epoch = 0;
    double mean_reward = 0.0;
    double val_accuracy = 0.0;
    double val_mean_cost = 0.0;
    double entropy = 0.0;
};

struct TrainResult {
    Network net; // best-validation checkpoint
    std::vector<EpochRecord> log;
};

/// On-policy episodic training: one episode per shuffled training row, with
/// per-episode gradient accumulation and one optimizer step at episode end.
/// Returns the checkpoint with the best validation objective
/// (accuracy - lambda * mean cost).
inline TrainResult train_a2c(const Dataset& ds_train, const Dataset& ds_val,
                             const A2CConfig& cfg) {
    cfg.validate();
    if (ds_train.n < 1 || ds_val.n < 1) throw ValidationError("train/val must be nonempty");
    int t_max = cfg.t_max < 0 ? ds_train.p : cfg.t_max;

    Network net = init_network(ds_train.p, ds_train.class_count, cfg.hidden, cfg.seed);
    AdamState adam;
    std::mt19937_64 rng = make_rng(cfg.seed, "episodes");

    TrainResult result;
    result.net = net;
    double best_obj = -std::numeric_limits<double>::infinity();
    bool evaluated = false;
    double last_acc = 0.0, last_cost = 0.0;

    std::vector<int> rows(ds_train.n);
    for (int i = 0; i < ds_train.n; ++i) rows[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(rows.begin(), rows.end(), rng);
        double reward_sum = 0.0, entropy_sum = 0.0, abs_delta_sum = 0.0;
        long step_count = 0;

        for (int row : rows) {
            auto episode = run_episode(ds_train, row, net, cfg.reward, t_max, rng,
                                       RolloutMode::Stochastic);
            auto deltas = td_errors(episode, net, cfg.reward.gamma);

            std::vector<A2CSample> batch;
            batch.reserve(episode.size());
            for (std::size_t i = 0; i < episode.size(); ++i) {
                const auto& tr = episode[i];
                double v_next =
                    tr.done ? 0.0 : forward(net, tr.next_state, tr.next_legal).value;
                A2CSample smp;
                smp.state = tr.state;
                smp.legal = tr.legal;
                smp.action = tr.action;
                smp.td_error = deltas[i];
                smp.value_target = tr.reward + cfg.reward.gamma * v_next;
                batch.push_back(std::move(smp));
                reward_sum += tr.reward;
                abs_delta_sum += std::abs(deltas[i]);
                ++step_count;
            }
            entropy_sum += policy_entropy(
                forward(net, episode[0].state, episode[0].legal).probs, episode[0].legal);
            auto g = a2c_gradient(net, batch, cfg.entropy_weight, cfg.value_loss_weight);
            apply_update(net, g.grad, adam, cfg.lr);
        }

        double mean_abs_delta = step_count ? abs_delta_sum / step_count : 0.0;
        if (mean_abs_delta > 1e3) {
            std::ostringstream msg;
            msg << "a2c diverged at epoch " << epoch << ": mean |td error| = " << mean_abs_delta;
            throw DivergenceError(msg.str());
        }

        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            auto rep = evaluate(net, ds_val, cfg.reward, t_max);
            last_acc = rep.accuracy;
            last_cost = rep.mean_cost;
            evaluated = true;
            if (rep.objective > best_obj) {
                best_obj = rep.objective;
                result.net = net;
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_reward = reward_sum / ds_train.n;
        rec.val_accuracy = last_acc;
        rec.val_mean_cost = last_cost;
        rec.entropy = entropy_sum / ds_train.n;
        result.log.push_back(rec);
    }
    if (!evaluated) result.net = net; // epochs == 0
    return result;
}

} // namespace cfc

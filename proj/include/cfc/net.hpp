#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfc/dataset.hpp"
#include "cfc/rng.hpp"

namespace cfc {

/// Partially shared network: three fully connected ReLU layers of width H on
/// the 2p state encoding, a policy head with p+K logits and a scalar value
/// head. Parameters live in one flat vector so optimizer state and
/// finite-difference checks operate uniformly.
struct Network {
    int p = 0;
    int K = 0;
    int H = 0;
    std::uint64_t init_seed = 0;
    std::vector<double> w;

    int input_dim() const { return 2 * p; }
    int action_dim() const { return p + K; }

    // flat layout: W0 b0 W1 b1 W2 b2 Wp bp Wv bv
    std::size_t off_w0() const { return 0; }
    std::size_t off_b0() const { return off_w0() + static_cast<std::size_t>(H) * input_dim(); }
    std::size_t off_w1() const { return off_b0() + H; }
    std::size_t off_b1() const { return off_w1() + static_cast<std::size_t>(H) * H; }
    std::size_t off_w2() const { return off_b1() + H; }
    std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(H) * H; }
    std::size_t off_wp() const { return off_b2() + H; }
    std::size_t off_bp() const { return off_wp() + static_cast<std::size_t>(action_dim()) * H; }
    std::size_t off_wv() const { return off_bp() + action_dim(); }
    std::size_t off_bv() const { return off_wv() + H; }
    std::size_t size() const { return off_bv() + 1; }
};

/// Seeded He initialization: weights ~ N(0, 2/fan_in), biases zero.
inline Network init_network(int p, int K, int H, std::uint64_t seed) {
    if (p < 1 || K < 1 || H < 1) throw ValidationError("network dims must be >= 1");
    Network net;
    net.p = p;
    net.K = K;
    net.H = H;
    net.init_seed = seed;
    net.w.assign(net.size(), 0.0);
    std::mt19937_64 rng = make_rng(seed, "init");
    std::normal_distribution<double> dist(0.0, 1.0);
    auto fill = [&](std::size_t off, std::size_t rows, std::size_t cols) {
        double scale = std::sqrt(2.0 / static_cast<double>(cols));
        for (std::size_t i = 0; i < rows * cols; ++i) net.w[off + i] = scale * dist(rng);
    };
    fill(net.off_w0(), H, net.input_dim());
    fill(net.off_w1(), H, H);
    fill(net.off_w2(), H, H);
    fill(net.off_wp(), net.action_dim(), H);
    fill(net.off_wv(), 1, H);
    return net;
}

struct PolicyValue {
    std::vector<double> logits;
    std::vector<double> probs; // exactly 0 on illegal actions
    double value = 0.0;
};

namespace detail {

struct ForwardCache {
    std::vector<double> input;
    std::vector<double> z0, h0, z1, h1, z2, h2;
    PolicyValue out;
};

inline void affine(const std::vector<double>& w, std::size_t off, int rows, int cols,
                   std::size_t bias_off, const std::vector<double>& in, std::vector<double>& out) {
    out.assign(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
        double acc = w[bias_off + r];
        const double* wr = w.data() + off + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += wr[c] * in[c];
        out[r] = acc;
    }
}

inline void relu(const std::vector<double>& z, std::vector<double>& h) {
    h.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) h[i] = z[i] > 0 ? z[i] : 0.0;
}

inline void masked_softmax(const std::vector<double>& logits,
                           std::span<const std::uint8_t> legal, std::vector<double>& probs) {
    probs.assign(logits.size(), 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (legal[i] && logits[i] > mx) mx = logits[i];
    if (mx == -std::numeric_limits<double>::infinity())
        throw std::logic_error("masked_softmax: no legal action");
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (legal[i]) z += (probs[i] = std::exp(logits[i] - mx));
    for (std::size_t i = 0; i < logits.size(); ++i) probs[i] /= z;
}

inline ForwardCache forward_cache(const Network& net, std::span<const double> state,
                                  std::span<const std::uint8_t> legal) {
    if (static_cast<int>(state.size()) != net.input_dim())
        throw ValidationError("state vector length mismatch");
    if (static_cast<int>(legal.size()) != net.action_dim())
        throw ValidationError("legal mask length mismatch");
    ForwardCache c;
    c.input.assign(state.begin(), state.end());
    affine(net.w, net.off_w0(), net.H, net.input_dim(), net.off_b0(), c.input, c.z0);
    relu(c.z0, c.h0);
    affine(net.w, net.off_w1(), net.H, net.H, net.off_b1(), c.h0, c.z1);
    relu(c.z1, c.h1);
    affine(net.w, net.off_w2(), net.H, net.H, net.off_b2(), c.h1, c.z2);
    relu(c.z2, c.h2);
    affine(net.w, net.off_wp(), net.action_dim(), net.H, net.off_bp(), c.h2, c.out.logits);
    std::vector<double> v;
    affine(net.w, net.off_wv(), 1, net.H, net.off_bv(), c.h2, v);
    c.out.value = v[0];
    masked_softmax(c.out.logits, legal, c.out.probs);
    return c;
}

/// Accumulate parameter gradients given loss gradients w.r.t. logits and value.
inline void backward(const Network& net, const ForwardCache& c,
                     const std::vector<double>& dlogits, double dvalue,
                     std::vector<double>& grad) {
    const int H = net.H, A = net.action_dim(), D = net.input_dim();
    std::vector<double> dh2(H, 0.0);
    for (int r = 0; r < A; ++r) {
        double g = dlogits[r];
        if (g == 0.0) continue;
        grad[net.off_bp() + r] += g;
        double* gw = grad.data() + net.off_wp() + static_cast<std::size_t>(r) * H;
        const double* wr = net.w.data() + net.off_wp() + static_cast<std::size_t>(r) * H;
        for (int cI = 0; cI < H; ++cI) {
            gw[cI] += g * c.h2[cI];
            dh2[cI] += g * wr[cI];
        }
    }
    if (dvalue != 0.0) {
        grad[net.off_bv()] += dvalue;
        double* gw = grad.data() + net.off_wv();
        const double* wr = net.w.data() + net.off_wv();
        for (int cI = 0; cI < H; ++cI) {
            gw[cI] += dvalue * c.h2[cI];
            dh2[cI] += dvalue * wr[cI];
        }
    }

    auto back_layer = [&](const std::vector<double>& z, const std::vector<double>& in,
                          std::size_t w_off, std::size_t b_off, std::vector<double>& dh,
                          std::vector<double>* din, int in_dim) {
        if (din) din->assign(in_dim, 0.0);
        for (int r = 0; r < H; ++r) {
            double g = z[r] > 0 ? dh[r] : 0.0;
            if (g == 0.0) continue;
            grad[b_off + r] += g;
            double* gw = grad.data() + w_off + static_cast<std::size_t>(r) * in_dim;
            const double* wr = net.w.data() + w_off + static_cast<std::size_t>(r) * in_dim;
            for (int cI = 0; cI < in_dim; ++cI) {
                gw[cI] += g * in[cI];
                if (din) (*din)[cI] += g * wr[cI];
            }
        }
    };

    std::vector<double> dh1;
    back_layer(c.z2, c.h1, net.off_w2(), net.off_b2(), dh2, &dh1, H);
    std::vector<double> dh0;
    back_layer(c.z1, c.h0, net.off_w1(), net.off_b1(), dh1, &dh0, H);
    back_layer(c.z0, c.input, net.off_w0(), net.off_b0(), dh0, nullptr, D);
}

} // namespace detail

/// Masked policy/value forward pass; pure and deterministic.
inline PolicyValue forward(const Network& net, std::span<const double> state,
                           std::span<const std::uint8_t> legal) {
    return detail::forward_cache(net, state, legal).out;
}

inline double policy_entropy(const std::vector<double>& probs,
                             std::span<const std::uint8_t> legal) {
    double h = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (legal[i] && probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    return h;
}

struct A2CSample {
    std::vector<double> state;
    std::vector<std::uint8_t> legal;
    int action = 0;          // flat index
    double td_error = 0.0;   // advantage estimate, constant w.r.t. theta
    double value_target = 0.0; // r + gamma*V(s'), constant w.r.t. theta
};

struct GradResult {
    std::vector<double> grad;
    double loss = 0.0;
};

/// Gradient of L = sum[-log pi(a|s)*delta - beta_H*H(pi(s))
///                   + value_weight*(target - V(s))^2].
/// Descent on L realizes the policy-gradient ascent with entropy regularization.
inline GradResult a2c_gradient(const Network& net, std::span<const A2CSample> batch,
                               double entropy_weight, double value_weight = 1.0) {
    GradResult out;
    out.grad.assign(net.size(), 0.0);
    for (const auto& s : batch) {
        if (!std::isfinite(s.td_error) || !std::isfinite(s.value_target))
            throw ValidationError("non-finite a2c sample");
        auto c = detail::forward_cache(net, s.state, s.legal);
        const auto& pi = c.out.probs;
        double H = policy_entropy(pi, s.legal);
        double logp = std::log(std::max(pi[s.action], 1e-300));
        out.loss += -logp * s.td_error - entropy_weight * H +
                    value_weight * (s.value_target - c.out.value) * (s.value_target - c.out.value);

        std::vector<double> dlogits(net.action_dim(), 0.0);
        for (int j = 0; j < net.action_dim(); ++j) {
            if (!s.legal[j]) continue;
            double g = s.td_error * (pi[j] - (j == s.action ? 1.0 : 0.0));
            if (entropy_weight != 0.0 && pi[j] > 0.0)
                g += entropy_weight * pi[j] * (std::log(pi[j]) + H);
            dlogits[j] = g;
        }
        double dvalue = 2.0 * value_weight * (c.out.value - s.value_target);
        detail::backward(net, c, dlogits, dvalue, out.grad);
    }
    return out;
}

struct MctsSample {
    std::vector<double> state;
    std::vector<std::uint8_t> legal;
    std::vector<double> pi_target; // search policy, zero on illegal actions
    double z = 0.0;                // value target
};

/// Gradient of sum[(z - v(s))^2 - sum_a pi_target(a) log pi(a|s)].
inline GradResult mcts_gradient(const Network& net, std::span<const MctsSample> batch) {
    GradResult out;
    out.grad.assign(net.size(), 0.0);
    for (const auto& s : batch) {
        if (!std::isfinite(s.z)) throw ValidationError("non-finite value target");
        double sum = 0.0;
        for (int j = 0; j < net.action_dim(); ++j) {
            if (!s.legal[j] && s.pi_target[j] != 0.0)
                throw ValidationError("pi_target puts mass on an illegal action");
            sum += s.pi_target[j];
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError("pi_target must sum to 1");

        auto c = detail::forward_cache(net, s.state, s.legal);
        const auto& pi = c.out.probs;
        double ce = 0.0;
        for (int j = 0; j < net.action_dim(); ++j)
            if (s.pi_target[j] > 0.0) ce -= s.pi_target[j] * std::log(std::max(pi[j], 1e-300));
        out.loss += (s.z - c.out.value) * (s.z - c.out.value) + ce;

        std::vector<double> dlogits(net.action_dim(), 0.0);
        for (int j = 0; j < net.action_dim(); ++j)
            if (s.legal[j]) dlogits[j] = pi[j] - s.pi_target[j];
        double dvalue = 2.0 * (c.out.value - s.z);
        detail::backward(net, c, dlogits, dvalue, out.grad);
    }
    return out;
}

/// Adaptive moment estimation state; one slot per parameter.
struct AdamState {
    std::vector<double> m, v;
    long steps = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// One optimizer step (minimization). Throws on non-finite gradients without
/// touching the parameters.
inline void apply_update(Network& net, const std::vector<double>& grad, AdamState& st,
                         double lr) {
    if (grad.size() != net.size()) throw ValidationError("gradient size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw ValidationError("non-finite gradient");
    if (st.m.empty()) {
        st.m.assign(net.size(), 0.0);
        st.v.assign(net.size(), 0.0);
    }
    ++st.steps;
    double bc1 = 1.0 - std::pow(st.beta1, st.steps);
    double bc2 = 1.0 - std::pow(st.beta2, st.steps);
    for (std::size_t i = 0; i < net.w.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        net.w[i] -= lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + st.eps);
    }
}

/// Checkpoint format "cfcnet 1": header with shapes and init seed, then one
/// hexfloat per parameter so load(save(net)) is bit-exact.
inline void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write checkpoint: " + path);
    out << "cfcnet 1\n" << net.p << ' ' << net.K << ' ' << net.H << ' ' << net.init_seed << '\n';
    out << net.w.size() << '\n';
    char buf[64];
    for (double v : net.w) {
        std::snprintf(buf, sizeof buf, "%a\n", v);
        out << buf;
    }
    if (!out) throw ValidationError("checkpoint write failed: " + path);
}

inline Network load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "cfcnet" || version != 1)
        throw ParseError("unrecognized checkpoint format: " + path);
    Network net;
    std::size_t count = 0;
    in >> net.p >> net.K >> net.H >> net.init_seed >> count;
    if (!in) throw ParseError("corrupt checkpoint header: " + path);
    net.w.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string tok;
        in >> tok;
        net.w[i] = std::strtod(tok.c_str(), nullptr);
    }
    if (!in || count != net.size()) throw ParseError("corrupt checkpoint payload: " + path);
    return net;
}

} // namespace cfc

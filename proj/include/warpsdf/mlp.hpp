#pragma once

// Small MLP signed distance field: positional encoding on the input
// position, softplus(beta) hidden layers, one skip connection, linear
// scalar output. Weights live in a contiguous block of the scene
// parameter vector.

#include <cmath>
#include <cstdint>
#include <vector>

#include "warpsdf/rng.hpp"
#include "warpsdf/vec.hpp"

namespace warpsdf {

struct MlpSdf {
    struct Layer {
        int in = 0, out = 0;
        int w_slot = 0, b_slot = 0; // absolute slots; weights row-major [out][in]
        bool skip_input = false;    // encoded input concatenated before this layer
    };

    std::vector<int> hidden{64, 64, 64, 64};
    int pe_levels = 6;  // frequencies 2^0 .. 2^(L-1), plus the raw position
    int skip_layer = 2; // hidden layer index receiving the skip concat
    int slot_offset = 0;
    double softplus_beta = 100.0;
    std::vector<Layer> layers; // hidden layers then the linear output layer

    MlpSdf() { build_layout(); }
    MlpSdf(std::vector<int> widths, int pe, int skip, int offset)
        : hidden(std::move(widths)), pe_levels(pe), skip_layer(skip), slot_offset(offset) {
        build_layout();
    }

    int input_dim() const { return 3 + 6 * pe_levels; }

    void build_layout() {
        layers.clear();
        int slot = slot_offset;
        int prev = input_dim();
        for (size_t i = 0; i < hidden.size(); ++i) {
            Layer l;
            l.skip_input = (int(i) == skip_layer && i > 0);
            l.in = l.skip_input ? prev + input_dim() : prev;
            l.out = hidden[i];
            l.w_slot = slot;
            l.b_slot = slot + l.in * l.out;
            slot = l.b_slot + l.out;
            layers.push_back(l);
            prev = l.out;
        }
        Layer out;
        out.in = prev;
        out.out = 1;
        out.w_slot = slot;
        out.b_slot = slot + out.in;
        layers.push_back(out);
    }

    int param_count() const {
        int n = 0;
        for (const auto& l : layers) n += l.in * l.out + l.out;
        return n;
    }

    int last_layer_bias_slot() const { return layers.back().b_slot; }
};

template <class S>
void mlp_encode(const MlpSdf& m, const Vec3<S>& x, std::vector<S>& enc) {
    enc.resize(m.input_dim());
    enc[0] = x.x;
    enc[1] = x.y;
    enc[2] = x.z;
    int at = 3;
    double freq = 1.0;
    for (int l = 0; l < m.pe_levels; ++l, freq *= 2.0) {
        for (int axis = 0; axis < 3; ++axis) {
            S p = x[axis] * freq;
            enc[at++] = sin(p);
            enc[at++] = cos(p);
        }
    }
}

template <class S, class TF, class = std::enable_if_t<std::is_invocable_v<TF&, int>>>
S mlp_eval(const MlpSdf& m, const Vec3<S>& x, TF&& tf) {
    static thread_local std::vector<S> enc, cur, nxt;
    mlp_encode(m, x, enc);
    cur.assign(enc.begin(), enc.end());
    const double inv_sqrt2 = 0.70710678118654752440;
    for (size_t li = 0; li < m.layers.size(); ++li) {
        const auto& l = m.layers[li];
        const bool last = (li + 1 == m.layers.size());
        if (l.skip_input) {
            size_t base = cur.size();
            cur.resize(base + enc.size());
            for (size_t i = 0; i < base; ++i) cur[i] = cur[i] * inv_sqrt2;
            for (size_t i = 0; i < enc.size(); ++i) cur[base + i] = enc[i] * inv_sqrt2;
        }
        nxt.resize(l.out);
        for (int j = 0; j < l.out; ++j) {
            S z = S(tf(l.b_slot + j));
            const int row = l.w_slot + j * l.in;
            for (int i = 0; i < l.in; ++i) z += S(tf(row + i)) * cur[i];
            nxt[j] = last ? z : softplus(z, m.softplus_beta);
        }
        cur.swap(nxt);
    }
    return cur[0];
}

// sigmoid(beta*z), the derivative of softplus(z, beta)
template <class S>
S softplus_deriv(const S& z, double beta) {
    double a = scalar_value(z) * beta;
    if (a > 30.0) return S(1.0);
    if (a < -30.0) return exp(z * beta);
    return 1.0 / (1.0 + exp(-z * beta));
}

// Reverse pass. Accumulates seed * df/dtheta through sink(slot, value) and,
// if x_adj is given, seed * df/dx into it. Returns f. Works for any dual
// scalar S; with a tangent-lifted position this yields mixed second
// derivatives (the nested pass the estimator needs).
template <class S, class Sink>
S mlp_backward(const MlpSdf& m, const Vec3<S>& x, const std::vector<double>& theta,
               const S& seed, Sink&& sink, Vec3<S>* x_adj) {
    static thread_local std::vector<S> enc;
    static thread_local std::vector<std::vector<S>> ins, pre, act;
    mlp_encode(m, x, enc);
    const size_t nl = m.layers.size();
    ins.resize(nl);
    pre.resize(nl);
    act.resize(nl);
    const double inv_sqrt2 = 0.70710678118654752440;

    // forward, stashing layer inputs and pre-activations
    for (size_t li = 0; li < nl; ++li) {
        const auto& l = m.layers[li];
        const std::vector<S>& prev = (li == 0) ? enc : act[li - 1];
        auto& in = ins[li];
        in.assign(prev.begin(), prev.end());
        if (l.skip_input) {
            size_t base = in.size();
            in.resize(base + enc.size());
            for (size_t i = 0; i < base; ++i) in[i] = in[i] * inv_sqrt2;
            for (size_t i = 0; i < enc.size(); ++i) in[base + i] = enc[i] * inv_sqrt2;
        }
        auto& z = pre[li];
        z.resize(l.out);
        for (int j = 0; j < l.out; ++j) {
            S acc = S(theta[l.b_slot + j]);
            const int row = l.w_slot + j * l.in;
            for (int i = 0; i < l.in; ++i) acc += S(theta[row + i]) * in[i];
            z[j] = acc;
        }
        if (li + 1 < nl) {
            act[li].resize(l.out);
            for (int j = 0; j < l.out; ++j) act[li][j] = softplus(z[j], m.softplus_beta);
        }
    }

    S f = pre[nl - 1][0];

    // reverse
    static thread_local std::vector<S> dcur, dprev, denc;
    denc.assign(enc.size(), S(0.0));
    dcur.assign(1, seed);
    for (size_t li = nl; li-- > 0;) {
        const auto& l = m.layers[li];
        const auto& in = ins[li];
        const bool last = (li + 1 == nl);
        static thread_local std::vector<S> dz;
        dz.resize(l.out);
        for (int j = 0; j < l.out; ++j)
            dz[j] = last ? dcur[j] : dcur[j] * softplus_deriv(pre[li][j], m.softplus_beta);
        dprev.assign(l.in, S(0.0));
        for (int j = 0; j < l.out; ++j) {
            const int row = l.w_slot + j * l.in;
            const S& s = dz[j];
            sink(l.b_slot + j, s);
            for (int i = 0; i < l.in; ++i) {
                sink(row + i, s * in[i]);
                dprev[i] += s * S(theta[row + i]);
            }
        }
        if (l.skip_input) {
            size_t base = dprev.size() - enc.size();
            for (size_t i = 0; i < enc.size(); ++i) denc[i] += dprev[base + i] * inv_sqrt2;
            dprev.resize(base);
            for (size_t i = 0; i < base; ++i) dprev[i] = dprev[i] * inv_sqrt2;
        }
        dcur.swap(dprev);
    }
    // dcur now holds the adjoint of the encoded input
    for (size_t i = 0; i < dcur.size(); ++i) denc[i] += dcur[i];

    if (x_adj) {
        Vec3<S> g{denc[0], denc[1], denc[2]};
        int at = 3;
        double freq = 1.0;
        for (int l = 0; l < m.pe_levels; ++l, freq *= 2.0) {
            for (int axis = 0; axis < 3; ++axis) {
                S p = x[axis] * freq;
                g[axis] += (denc[at] * cos(p) - denc[at + 1] * sin(p)) * freq;
                at += 2;
            }
        }
        *x_adj += g;
    }
    return f;
}

// Geometric initialization: the network starts out approximating
// f(x) = |x| - r0, with the positional-encoding weights set to zero
// (first layer and the encoded part of the skip input).
inline void geometric_init(const MlpSdf& m, std::uint64_t seed, double r0,
                           std::vector<double>& theta) {
    const double pi = 3.14159265358979323846;
    for (size_t li = 0; li < m.layers.size(); ++li) {
        const auto& l = m.layers[li];
        Rng rng = Rng::keyed({seed, kStreamInit, std::uint64_t(li)});
        const bool last = (li + 1 == m.layers.size());
        if (last) {
            double mean = std::sqrt(pi) / std::sqrt(double(l.in));
            for (int i = 0; i < l.in * l.out; ++i)
                theta[l.w_slot + i] = mean + 1e-4 * rng.normal();
            for (int j = 0; j < l.out; ++j) theta[l.b_slot + j] = -r0;
            continue;
        }
        double sigma = std::sqrt(2.0) / std::sqrt(double(l.out));
        for (int j = 0; j < l.out; ++j)
            for (int i = 0; i < l.in; ++i)
                theta[l.w_slot + j * l.in + i] = sigma * rng.normal();
        for (int j = 0; j < l.out; ++j) theta[l.b_slot + j] = 0.0;
        if (li == 0) {
            // zero every positional-encoding column, keep raw xyz
            for (int j = 0; j < l.out; ++j)
                for (int i = 3; i < l.in; ++i) theta[l.w_slot + j * l.in + i] = 0.0;
        } else if (l.skip_input) {
            // zero the encoded part of the skip concat except raw xyz
            int base = l.in - m.input_dim();
            for (int j = 0; j < l.out; ++j)
                for (int i = base + 3; i < l.in; ++i) theta[l.w_slot + j * l.in + i] = 0.0;
        }
    }
}

} // namespace warpsdf

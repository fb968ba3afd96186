#include "dlo/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace dlo {

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least in/out sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        int in = sizes[l], out = sizes[l + 1];
        Mat m(out, in);
        double limit = std::sqrt(6.0 / (in + out));
        for (auto& x : m.a) x = rng.uniform(-limit, limit);
        w.push_back(std::move(m));
        b.emplace_back(static_cast<std::size_t>(out), 0.0);
    }
}

Vec Mlp::forward(const Vec& x) const {
    Vec h = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
        Vec out(b[l]);
        for (int r = 0; r < w[l].rows; ++r) {
            double acc = out[static_cast<std::size_t>(r)];
            const double* row = &w[l].a[static_cast<std::size_t>(r) * w[l].cols];
            for (int c = 0; c < w[l].cols; ++c) acc += row[c] * h[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] = acc;
        }
        if (l + 1 < w.size()) {
            for (auto& v : out) v = std::tanh(v);
        }
        h = std::move(out);
    }
    return h;
}

Vec Mlp::forward(const Vec& x, Tape& tape) const {
    tape.input = x;
    tape.pre.clear();
    tape.post.clear();
    Vec h = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
        Vec pre(b[l]);
        for (int r = 0; r < w[l].rows; ++r) {
            double acc = pre[static_cast<std::size_t>(r)];
            const double* row = &w[l].a[static_cast<std::size_t>(r) * w[l].cols];
            for (int c = 0; c < w[l].cols; ++c) acc += row[c] * h[static_cast<std::size_t>(c)];
            pre[static_cast<std::size_t>(r)] = acc;
        }
        tape.pre.push_back(pre);
        if (l + 1 < w.size()) {
            for (auto& v : pre) v = std::tanh(v);
        }
        tape.post.push_back(pre);
        h = std::move(pre);
    }
    return h;
}

Vec Mlp::backward(const Tape& tape, const Vec& dout, Mlp& grads) const {
    Vec delta = dout;
    for (int l = layer_count() - 1; l >= 0; --l) {
        auto lu = static_cast<std::size_t>(l);
        const Vec& in = l == 0 ? tape.input : tape.post[lu - 1];
        for (int r = 0; r < w[lu].rows; ++r) {
            auto ru = static_cast<std::size_t>(r);
            grads.b[lu][ru] += delta[ru];
            double* grow = &grads.w[lu].a[ru * static_cast<std::size_t>(w[lu].cols)];
            for (int c = 0; c < w[lu].cols; ++c)
                grow[c] += delta[ru] * in[static_cast<std::size_t>(c)];
        }
        Vec dinput(static_cast<std::size_t>(w[lu].cols), 0.0);
        for (int r = 0; r < w[lu].rows; ++r) {
            const double* row = &w[lu].a[static_cast<std::size_t>(r) * w[lu].cols];
            double d = delta[static_cast<std::size_t>(r)];
            for (int c = 0; c < w[lu].cols; ++c) dinput[static_cast<std::size_t>(c)] += d * row[c];
        }
        if (l > 0) {
            // tanh' through the previous layer's activation
            for (std::size_t c = 0; c < dinput.size(); ++c) {
                double a = tape.post[lu - 1][c];
                dinput[c] *= 1.0 - a * a;
            }
        }
        delta = std::move(dinput);
    }
    return delta;
}

void Mlp::zero() {
    for (auto& m : w) std::fill(m.a.begin(), m.a.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

size_t Mlp::param_count() const {
    size_t n = 0;
    for (std::size_t l = 0; l < w.size(); ++l) n += w[l].a.size() + b[l].size();
    return n;
}

double* Mlp::param(size_t flat_index) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        if (flat_index < w[l].a.size()) return &w[l].a[flat_index];
        flat_index -= w[l].a.size();
        if (flat_index < b[l].size()) return &b[l][flat_index];
        flat_index -= b[l].size();
    }
    throw std::out_of_range("Mlp::param index");
}

double Mlp::param(size_t flat_index) const { return *const_cast<Mlp*>(this)->param(flat_index); }

void Mlp::add_scaled(const Mlp& other, double s) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += s * other.w[l].a[i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += s * other.b[l][i];
    }
}

void Adam::init(const Mlp& shape) {
    m = shape;
    v = shape;
    m.zero();
    v.zero();
    t = 0;
}

void Adam::step(Mlp& params, const Mlp& grads) {
    ++t;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto update = [&](double& p, double& mm, double& vv, double g) {
        mm = beta1 * mm + (1.0 - beta1) * g;
        vv = beta2 * vv + (1.0 - beta2) * g * g;
        p -= lr * (mm / c1) / (std::sqrt(vv / c2) + eps);
    };
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        for (std::size_t i = 0; i < params.w[l].a.size(); ++i)
            update(params.w[l].a[i], m.w[l].a[i], v.w[l].a[i], grads.w[l].a[i]);
        for (std::size_t i = 0; i < params.b[l].size(); ++i)
            update(params.b[l][i], m.b[l][i], v.b[l][i], grads.b[l][i]);
    }
}

}  // namespace dlo

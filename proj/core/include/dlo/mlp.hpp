#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlo/rng.hpp"

namespace dlo {

using Vec = std::vector<double>;

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

/// Fully connected net with tanh hidden activations and a linear output.
/// sizes = {in, h1, ..., out}; zero hidden layers gives a plain linear map.
/// Double precision throughout so finite-difference checks are meaningful.
struct Mlp {
    std::vector<Mat> w;
    std::vector<Vec> b;

    Mlp() = default;
    Mlp(const std::vector<int>& sizes, Rng& rng);

    int input_dim() const { return w.empty() ? 0 : w.front().cols; }
    int output_dim() const { return w.empty() ? 0 : w.back().rows; }
    int layer_count() const { return static_cast<int>(w.size()); }

    Vec forward(const Vec& x) const;

    /// Forward pass keeping pre-activations for backward.
    struct Tape {
        Vec input;
        std::vector<Vec> pre;   // per layer, before activation
        std::vector<Vec> post;  // per layer, after activation (last = output)
    };
    Vec forward(const Vec& x, Tape& tape) const;

    /// Accumulates parameter gradients into grads (same shapes as the net),
    /// returns dL/dinput.
    Vec backward(const Tape& tape, const Vec& dout, Mlp& grads) const;

    void zero();
    size_t param_count() const;
    double* param(size_t flat_index);
    double param(size_t flat_index) const;
    void add_scaled(const Mlp& other, double s);  // this += s * other
};

/// Adam with bias correction; one optimizer per net.
struct Adam {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Mlp m, v;
    int64_t t = 0;

    void init(const Mlp& shape);
    void step(Mlp& params, const Mlp& grads);
};

}  // namespace dlo

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qdecomp/milp_model.hpp"
#include "qdecomp/relu_verifier.hpp"
#include "qdecomp/rng.hpp"

namespace qdecomp::gen {

struct MilpSize {
    std::size_t n_x = 3;
    std::size_t n_y = 4;
    std::size_t m = 4;
    /// x is boxed to [-box, box] through the rows of C.
    double box = 6.0;
};

/// Random mixed-binary program with integer data. A point (x*, y*) is drawn
/// first and every right-hand side is set at or below its row activity, so the
/// instance is feasible; the box keeps every relaxation bounded.
inline MilpProblem random_milp(const MilpSize& size, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    const std::size_t nx = size.n_x, ny = size.n_y;
    MilpProblem p;
    Vector x_star(nx);
    for (auto& v : x_star) v = static_cast<double>(rng.integer(-3, 3));
    Bits y_star(ny);
    for (auto& v : y_star) v = rng.coin() ? 1 : 0;
    p.c.resize(nx);
    for (auto& v : p.c) v = static_cast<double>(rng.integer(-5, 5));
    p.d.resize(ny);
    for (auto& v : p.d) v = static_cast<double>(rng.integer(-5, 5));
    p.A = Matrix(0, nx);
    p.B = Matrix(0, ny);
    p.C = Matrix(0, nx);
    for (std::size_t i = 0; i < size.m; ++i) {
        Vector a(nx), b(ny);
        for (auto& v : a) v = rng.coin(0.75) ? static_cast<double>(rng.integer(-4, 4)) : 0.0;
        for (auto& v : b) v = rng.coin(0.75) ? static_cast<double>(rng.integer(-4, 4)) : 0.0;
        const double activity = dot(a, x_star) + binary_dot(b, y_star);
        p.add_coupling_row(a, b, activity - static_cast<double>(rng.integer(0, 3)));
    }
    for (std::size_t j = 0; j < nx; ++j) {
        Vector row(nx, 0.0);
        row[j] = 1.0;
        p.add_easy_row(row, -size.box);
        row[j] = -1.0;
        p.add_easy_row(row, -size.box);
    }
    return p;
}

struct NetworkShape {
    std::size_t input = 2;
    std::vector<std::size_t> hidden{4, 4};
    std::size_t classes = 3;
};

/// Fully connected ReLU network with weights and biases uniform in [-1, 1].
inline relu::Network random_network(const NetworkShape& shape, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    relu::Network net;
    std::vector<std::size_t> widths = shape.hidden;
    widths.push_back(shape.classes);
    std::size_t in = shape.input;
    for (std::size_t w : widths) {
        relu::Layer layer{Matrix(w, in), Vector(w)};
        for (std::size_t r = 0; r < w; ++r) {
            for (std::size_t c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-1.0, 1.0);
            layer.bias[r] = rng.uniform(-1.0, 1.0);
        }
        net.layers.push_back(std::move(layer));
        in = w;
    }
    return net;
}

struct Sample {
    Vector features;
    std::size_t label = 0;
};

/// Inputs uniform in [0, 1]^d labelled by the network's own prediction; a
/// fraction `label_noise` of the labels is replaced by a different class.
/// Points whose output has a tied maximum are redrawn.
inline std::vector<Sample> random_samples(const relu::Network& net, std::size_t count,
                                          std::uint64_t seed, double label_noise = 0.0) {
    Xoshiro256 rng(seed);
    const std::size_t d = net.input_size();
    const std::size_t k = net.num_classes();
    std::vector<Sample> out;
    out.reserve(count);
    while (out.size() < count) {
        Sample s{Vector(d), 0};
        for (auto& v : s.features) v = rng.unit();
        const auto pred = relu::unique_argmax(net.forward(s.features));
        if (!pred) continue;
        s.label = *pred;
        if (k > 1 && rng.coin(label_noise)) {
            const auto shift = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(k) - 1));
            s.label = (s.label + shift) % k;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace qdecomp::gen

#pragma once

// Discrete deblurring model: N x N images on a grid with spacing 1/N, a
// normalized Gaussian blur with zero padding, and the smoothed discrete
// H1 norm  R(u) = sqrt(||u||^2 + ||grad u||^2 + delta^2).

#include "msdecomp/core.hpp"
#include "msdecomp/engine.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace msdecomp::deblur {

struct ImageField {
    std::size_t n = 0;
    Vector values; ///< row-major, values[i * n + j]

    ImageField() = default;
    explicit ImageField(std::size_t side, double fill = 0.0) : n(side), values(side * side, fill) {}
    ImageField(std::size_t side, Vector v) : n(side), values(std::move(v)) {
        if (values.size() != n * n) throw std::invalid_argument("ImageField: value count is not n*n");
    }

    double h() const { return 1.0 / static_cast<double>(n); }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    bool finite() const { return all_finite(values); }
};

struct Kernel {
    int size = 1;
    double sigma = 1.0;
    std::vector<double> weights; ///< size*size, row-major, centered

    int radius() const { return size / 2; }
    double w(int a, int b) const { return weights[static_cast<std::size_t>((a + radius()) * size + (b + radius()))]; }
};

/// Isotropic Gaussian sampled at integer offsets, normalized to sum 1.
inline Kernel gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0) throw std::invalid_argument("kernel size must be odd and >= 1");
    if (!(sigma > 0) || !std::isfinite(sigma)) throw std::invalid_argument("kernel sigma must be positive");
    Kernel k;
    k.size = size;
    k.sigma = sigma;
    k.weights.resize(static_cast<std::size_t>(size * size));
    const int r = size / 2;
    double sum = 0.0;
    for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b) {
            const double v = std::exp(-static_cast<double>(a * a + b * b) / (2.0 * sigma * sigma));
            k.weights[static_cast<std::size_t>((a + r) * size + (b + r))] = v;
            sum += v;
        }
    for (double& v : k.weights) v /= sum;
    return k;
}

/// (K u)(i,j) = sum_{a,b} w(a,b) u(i-a, j-b), with u = 0 outside the grid.
inline Vector blur_apply(const Vector& u, std::size_t n, const Kernel& k) {
    if (u.size() != n * n) throw std::invalid_argument("blur_apply: size mismatch");
    const long N = static_cast<long>(n), r = k.radius();
    Vector out(n * n, 0.0);
    for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j) {
            double s = 0.0;
            const long a_lo = std::max(-r, i - (N - 1)), a_hi = std::min(r, i);
            const long b_lo = std::max(-r, j - (N - 1)), b_hi = std::min(r, j);
            for (long a = a_lo; a <= a_hi; ++a) {
                const double* row = u.data() + (i - a) * N;
                const double* wr = k.weights.data() + (a + r) * k.size + r;
                for (long b = b_lo; b <= b_hi; ++b) s += wr[b] * row[j - b];
            }
            out[static_cast<std::size_t>(i * N + j)] = s;
        }
    return out;
}

/// Transpose of blur_apply: (K^T v)(i,j) = sum_{a,b} w(a,b) v(i+a, j+b).
inline Vector blur_adjoint(const Vector& v, std::size_t n, const Kernel& k) {
    if (v.size() != n * n) throw std::invalid_argument("blur_adjoint: size mismatch");
    const long N = static_cast<long>(n), r = k.radius();
    Vector out(n * n, 0.0);
    for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j) {
            double s = 0.0;
            const long a_lo = std::max(-r, -i), a_hi = std::min(r, N - 1 - i);
            const long b_lo = std::max(-r, -j), b_hi = std::min(r, N - 1 - j);
            for (long a = a_lo; a <= a_hi; ++a) {
                const double* row = v.data() + (i + a) * N;
                const double* wr = k.weights.data() + (a + r) * k.size + r;
                for (long b = b_lo; b <= b_hi; ++b) s += wr[b] * row[j + b];
            }
            out[static_cast<std::size_t>(i * N + j)] = s;
        }
    return out;
}

struct BlurOperator {
    std::size_t n = 0;
    Kernel kernel;

    Vector apply(const Vector& u) const { return blur_apply(u, n, kernel); }
    Vector adjoint(const Vector& v) const { return blur_adjoint(v, n, kernel); }
    ImageField apply(const ImageField& u) const { return ImageField(n, apply(u.values)); }
};

// ---------------------------------------------------------------------------
// Smoothed H1 norm. Forward differences, replicate boundary: the difference
// across the last row/column is zero.

struct H1Params {
    double delta = 1e-3;
};

/// ||u||^2 + ||grad u||^2
inline double h1_energy(const Vector& u, std::size_t n) {
    if (u.size() != n * n) throw std::invalid_argument("h1: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double c = u[i * n + j];
            s += c * c;
            if (i + 1 < n) {
                const double d = u[(i + 1) * n + j] - c;
                s += d * d;
            }
            if (j + 1 < n) {
                const double d = u[i * n + j + 1] - c;
                s += d * d;
            }
        }
    return s;
}

/// (I + D^T D) u, i.e. half the gradient of h1_energy.
inline Vector h1_apply(const Vector& u, std::size_t n) {
    Vector g(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double c = u[i * n + j];
            double s = c;
            if (i > 0) s += c - u[(i - 1) * n + j];
            if (i + 1 < n) s += c - u[(i + 1) * n + j];
            if (j > 0) s += c - u[i * n + j - 1];
            if (j + 1 < n) s += c - u[i * n + j + 1];
            g[i * n + j] = s;
        }
    return g;
}

inline double h1_value(const Vector& u, std::size_t n, const H1Params& p) {
    return std::sqrt(h1_energy(u, n) + p.delta * p.delta);
}

inline double h1_value(const ImageField& u, const H1Params& p) { return h1_value(u.values, u.n, p); }

/// Gradient (I + D^T D) u / R(u); zero when R(u) = 0.
inline ImageField h1_gradient(const ImageField& u, const H1Params& p) {
    const double r = h1_value(u, p);
    ImageField g(u.n);
    if (r == 0.0) return g;
    g.values = h1_apply(u.values, u.n);
    for (double& v : g.values) v /= r;
    return g;
}

/// Discrete H1 distance sqrt(||a - b||^2 + ||grad (a - b)||^2).
inline double h1_distance(const Vector& a, const Vector& b, std::size_t n) {
    return std::sqrt(h1_energy(subtract(a, b), n));
}

struct H1Regularizer {
    std::size_t n = 0;
    H1Params params;

    double value(const Vector& u) const { return h1_value(u, n, params); }
    double value_and_gradient(const Vector& u, Vector& grad) const {
        const double r = value(u);
        if (r == 0.0) {
            grad.assign(u.size(), 0.0);
            return 0.0;
        }
        grad = h1_apply(u, n);
        for (double& v : grad) v /= r;
        return r;
    }
    bool homogeneous() const { return params.delta == 0.0; }
};

using DeblurProblem = engine::ProblemInstance<BlurOperator, H1Regularizer>;
using DeblurObjective = engine::TikhonovObjective<BlurOperator, H1Regularizer>;

inline DeblurProblem make_problem(const ImageField& observed, const Kernel& k, const H1Params& p) {
    return DeblurProblem{BlurOperator{observed.n, k}, observed.values, 2.0, 1.0, H1Regularizer{observed.n, p}};
}

/// F(u) = lambda ||data - K(u + sigma_prev)||^2 + R(u), as a value-and-gradient
/// handle. The operator and regularizer live in `pb`, which must outlive the
/// returned object.
inline DeblurObjective objective(const DeblurProblem& pb, const Vector& sigma_prev, double lambda) {
    return DeblurObjective(pb.forward, pb.regularizer, pb.data, sigma_prev, lambda, 2.0, 1.0);
}

// ---------------------------------------------------------------------------
// Noise: counter-based SplitMix64 uniforms and Box-Muller.
//
// Pixel p uses the pair m = p / 2. Counters 2m and 2m+1 feed
//   x_c = splitmix64(seed + (c + 1) * 0x9E3779B97F4A7C15)
//   u_c = ((x_c >> 11) + 1) * 2^-53            (in (0, 1])
// then z = sqrt(-2 ln u_{2m}) * cos(2 pi u_{2m+1}) for even p and the sine
// for odd p. The pixel gets sqrt(variance) * z added.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t x = splitmix64(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

inline double standard_normal(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t m = index / 2;
    const double u1 = counter_uniform(seed, 2 * m), u2 = counter_uniform(seed, 2 * m + 1);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return index % 2 == 0 ? rad * std::cos(ang) : rad * std::sin(ang);
}

inline ImageField add_gaussian_noise(const ImageField& img, double variance, std::uint64_t seed) {
    if (!(variance >= 0) || !std::isfinite(variance)) throw std::invalid_argument("noise variance must be >= 0");
    ImageField out = img;
    if (variance == 0.0) return out;
    const double sd = std::sqrt(variance);
    for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] += sd * standard_normal(seed, p);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic test object: a few smooth anisotropic blobs on a dark
// background, fixed by `seed`. Coordinates are the cell corners (i h, j h).

struct Blob {
    double cx, cy, sx, sy, angle, amplitude;
};

inline std::vector<Blob> phantom_blobs(std::uint64_t seed = 1952) {
    std::vector<Blob> blobs;
    std::uint64_t c = 0;
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * counter_uniform(seed, c++); };
    // one broad envelope and a handful of smaller knots
    blobs.push_back({0.5, 0.5, 0.20, 0.13, uni(0.0, std::numbers::pi), 0.55});
    for (int b = 0; b < 6; ++b)
        blobs.push_back({uni(0.3, 0.7), uni(0.3, 0.7), uni(0.03, 0.08), uni(0.02, 0.06), uni(0.0, std::numbers::pi),
                         uni(0.15, 0.4)});
    return blobs;
}

inline ImageField phantom(std::size_t n, std::uint64_t seed = 1952) {
    if (n == 0) throw std::invalid_argument("phantom: n must be positive");
    ImageField img(n);
    const double h = 1.0 / static_cast<double>(n);
    const auto blobs = phantom_blobs(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = static_cast<double>(i) * h, y = static_cast<double>(j) * h;
            double v = 0.0;
            for (const Blob& b : blobs) {
                const double dx = x - b.cx, dy = y - b.cy;
                const double ca = std::cos(b.angle), sa = std::sin(b.angle);
                const double p = (ca * dx + sa * dy) / b.sx, q = (-sa * dx + ca * dy) / b.sy;
                v += b.amplitude * std::exp(-0.5 * (p * p + q * q));
            }
            img.at(i, j) = std::min(v, 1.0);
        }
    return img;
}

/// ||a - b|| / ||b||. Throws std::domain_error for a zero reference.
inline double relative_error(const Vector& a, const Vector& b) {
    const double bn = norm2(b);
    if (bn == 0.0) throw std::domain_error("relative_error: reference has zero norm");
    return distance2(a, b) / bn;
}

inline double relative_error(const ImageField& a, const ImageField& b) {
    if (a.n != b.n) throw std::invalid_argument("relative_error: shape mismatch");
    return relative_error(a.values, b.values);
}

} // namespace msdecomp::deblur

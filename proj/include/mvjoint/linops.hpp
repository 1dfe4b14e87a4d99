#pragma once

#include <cmath>
#include <concepts>
#include <random>
#include <stdexcept>
#include <vector>

namespace mvjoint {

/// Anything with a matching adjoint can feed the frame-bound estimator and
/// the iterative prox below.
template <class Op>
concept LinearOp = requires(const Op& op, const std::vector<double>& v) {
    { op.domain_size() } -> std::convertible_to<int>;
    { op.range_size() } -> std::convertible_to<int>;
    { op.apply(v) } -> std::same_as<std::vector<double>>;
    { op.apply_transpose(v) } -> std::same_as<std::vector<double>>;
};

inline double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vec_dot: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double vec_rms(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vec_rms: size mismatch");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s / double(a.size()));
}

inline bool vec_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Deterministic uniform vector in [-0.5, 0.5)^n.
inline std::vector<double> seeded_vector(size_t n, uint32_t seed) {
    std::mt19937 eng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = double(eng()) / 4294967296.0 - 0.5;
    return v;
}

}  // namespace mvjoint

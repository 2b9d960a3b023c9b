#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

namespace lossyci {

/// Euclidean projection of `v` onto the probability simplex, in place.
inline void project_to_simplex(std::span<double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        cumulative += s[i];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (s[i] - t > 0.0) theta = t;
    }
    for (auto& x : v) x = std::max(x - theta, 0.0);
}

/// Calls `visit` with every point of the simplex lattice {c / steps : sum c = steps}
/// in dimension `dim`, in lexicographic order of the counts.
template <class Visit>
void for_each_lattice_point(std::size_t dim, std::size_t steps, Visit&& visit) {
    std::vector<std::size_t> counts(dim, 0);
    std::vector<double> point(dim);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos + 1 == dim) {
            counts[pos] = left;
            for (std::size_t i = 0; i < dim; ++i) point[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
            visit(std::span<const double>(point));
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            counts[pos] = c;
            rec(pos + 1, left - c);
        }
    };
    rec(0, steps);
}

/// Number of lattice points: C(steps + dim - 1, dim - 1).
inline double lattice_size(std::size_t dim, std::size_t steps) {
    double n = 1.0;
    for (std::size_t i = 1; i < dim; ++i) n = n * static_cast<double>(steps + i) / static_cast<double>(i);
    return n;
}

}  // namespace lossyci

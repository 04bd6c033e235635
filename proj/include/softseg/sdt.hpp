#ifndef SOFTSEG_SDT_HPP
#define SOFTSEG_SDT_HPP

// Annotation boundary extraction and exact signed Euclidean distances to it.
// The transform is the lower-envelope-of-parabolas algorithm applied per
// axis (Felzenszwalb & Huttenlocher), which is exact; the O(N*|B|) brute
// force lives in the tests as the oracle, not here.
//
// Boundary convention: a boundary pixel is a foreground pixel with at least
// one background face-neighbor. Boundary pixels get d = 0, strict interior
// d > 0, background d < 0. Out-of-bounds neighbors count as background only
// when border_is_background is set, so by default nothing is softened along
// the image frame.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "softseg/grid.hpp"

namespace softseg {

struct BoundarySet {
    std::vector<std::size_t> coords;  // flat indices, row-major
    AxisSizes dims;
    AxisSpacing spacing;

    bool empty() const { return coords.empty(); }
};

template <typename T>
BoundarySet extract_boundary(const Grid<T>& mask, bool border_is_background = false) {
    BoundarySet set;
    set.dims = mask.dims();
    set.spacing = mask.spacing();
    const std::size_t nd = mask.ndim();
    const auto strides = mask.strides();
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        mask.coord_of(i, std::span<std::size_t>(coord.data(), nd));
        bool on_boundary = false;
        for (std::size_t a = 0; a < nd && !on_boundary; ++a) {
            if (coord[a] == 0 || coord[a] + 1 == mask.dims()[a]) {
                if (border_is_background) {
                    on_boundary = true;
                    break;
                }
            }
            if (coord[a] > 0 && !mask[i - strides[a]]) on_boundary = true;
            if (coord[a] + 1 < mask.dims()[a] && !mask[i + strides[a]]) on_boundary = true;
        }
        if (on_boundary) set.coords.push_back(i);
    }
    return set;
}

namespace detail {

constexpr double kEdtInf = 1e30;

// 1D squared-distance transform along one line; positions are q*step.
inline void edt_line(std::span<const double> f, std::span<double> d, double step,
                     std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    const double inf = std::numeric_limits<double>::infinity();
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n) + 1);
    int k = 0;
    v[0] = 0;
    // envelope sentinels must be true infinities: with sub-unit spacing the
    // parabola intersections can exceed any finite sentinel value
    z[0] = -inf;
    z[1] = +inf;
    auto x = [step](int q) { return step * q; };
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + x(q) * x(q)) - (f[v[k]] + x(v[k]) * x(v[k]))) /
                   (2 * x(q) - 2 * x(v[k]));
        while (s <= z[k]) {
            --k;
            s = ((f[q] + x(q) * x(q)) - (f[v[k]] + x(v[k]) * x(v[k]))) /
                (2 * x(q) - 2 * x(v[k]));
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = +inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < x(q)) ++k;
        const double dx = x(q) - x(v[k]);
        d[q] = dx * dx + f[v[k]];
    }
}

}  // namespace detail

// Unsigned Euclidean distance from every pixel to the nearest of `points`
// (flat indices), with per-axis sample spacing. Unit spacing gives exact
// pixel-unit distances.
inline Grid<double> distance_to_point_set(const AxisSizes& dims, const AxisSpacing& spacing,
                                          std::span<const std::size_t> points) {
    if (points.empty())
        throw std::invalid_argument("distance_to_point_set: empty point set has no distance");
    Grid<double> sq(dims, detail::kEdtInf, spacing);
    for (std::size_t p : points) sq[p] = 0.0;

    const std::size_t nd = sq.ndim();
    const auto strides = sq.strides();
    std::vector<double> line, out;
    std::vector<int> v;
    std::vector<double> z;
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t axis = 0; axis < nd; ++axis) {
        const std::size_t len = dims[axis];
        if (len == 1) continue;
        line.resize(len);
        out.resize(len);
        const std::size_t stride = strides[axis];
        const std::size_t n_lines = sq.size() / len;
        for (std::size_t l = 0; l < n_lines; ++l) {
            // flat index of the line's first element: expand l over the
            // remaining axes
            std::size_t rem = l, base = 0;
            for (std::size_t a = nd; a-- > 0;) {
                if (a == axis) continue;
                coord[a] = rem % dims[a];
                rem /= dims[a];
                base += coord[a] * strides[a];
            }
            for (std::size_t q = 0; q < len; ++q) line[q] = sq[base + q * stride];
            detail::edt_line(line, out, spacing[axis], v, z);
            for (std::size_t q = 0; q < len; ++q) sq[base + q * stride] = out[q];
        }
    }
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = std::sqrt(sq[i]);
    return sq;
}

// The d_i field: |d| is the exact pixel-unit distance to the mask boundary,
// positive strictly inside the foreground, zero on boundary pixels,
// negative outside.
template <typename T>
Grid<double> signed_edt(const Grid<T>& mask, bool border_is_background = false) {
    BoundarySet boundary = extract_boundary(mask, border_is_background);
    if (boundary.empty())
        throw std::runtime_error("signed_edt: mask has no boundary pixels");
    AxisSpacing unit(mask.ndim(), 1.0);
    Grid<double> field = distance_to_point_set(mask.dims(), unit, boundary.coords);
    for (std::size_t i = 0; i < field.size(); ++i)
        if (!mask[i]) field[i] = -field[i];
    return field;
}

}  // namespace softseg

#endif  // SOFTSEG_SDT_HPP

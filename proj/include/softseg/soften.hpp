#ifndef SOFTSEG_SOFTEN_HPP
#define SOFTSEG_SOFTEN_HPP

// Superpixel-guided label softening. Each (superpixel, class-foreground)
// pair is Inside, Outside, or Intersect; only Intersect blocks are softened,
// pixel-wise, by mapping the signed boundary distance through
//
//     q = 0.5 * (d / (1 + |d|) + 1)
//
// so a boundary pixel gets exactly 0.5 and q tends to 1 (0) deep inside
// (outside). Everywhere else the hard one-hot values pass through
// bit-for-bit. A Gaussian-blur baseline softener is included for
// comparison runs.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "softseg/grid.hpp"
#include "softseg/sdt.hpp"
#include "softseg/slic.hpp"

namespace softseg {

enum class Relation { Inside, Outside, Intersect };

template <typename T>
Relation classify_relation(std::span<const std::size_t> block_pixels, const Grid<T>& plane) {
    if (block_pixels.empty()) throw std::invalid_argument("classify_relation: empty block");
    std::size_t fg = 0;
    for (std::size_t p : block_pixels) fg += plane[p] ? 1 : 0;
    if (fg == block_pixels.size()) return Relation::Inside;
    if (fg == 0) return Relation::Outside;
    return Relation::Intersect;
}

inline double dist_to_prob(double d) { return 0.5 * (d / (1.0 + std::abs(d)) + 1.0); }

struct SoftLabelStack {
    std::vector<Grid<double>> planes;
    bool normalized = false;

    std::int32_t num_classes() const { return static_cast<std::int32_t>(planes.size()); }
    const AxisSizes& dims() const { return planes.front().dims(); }
};

// per-block flat pixel lists, raster order within each block
inline std::vector<std::vector<std::size_t>> collect_block_pixels(const SuperpixelMap& sp) {
    std::vector<std::vector<std::size_t>> blocks(static_cast<std::size_t>(sp.num_blocks));
    for (std::size_t p = 0; p < sp.block_ids.size(); ++p)
        blocks[static_cast<std::size_t>(sp.block_ids[p])].push_back(p);
    return blocks;
}

inline SoftLabelStack soften(const OneHotStack& hard, const SuperpixelMap& sp,
                             bool normalize = true) {
    if (hard.planes.empty()) throw std::invalid_argument("soften: empty stack");
    require_same_dims(hard.planes.front(), sp.block_ids, "soften");

    const auto blocks = collect_block_pixels(sp);
    SoftLabelStack out;
    out.planes.reserve(hard.planes.size());

    for (const auto& plane : hard.planes) {
        Grid<double> q(plane.dims(), 0.0, plane.spacing());
        for (std::size_t i = 0; i < plane.size(); ++i) q[i] = plane[i] ? 1.0 : 0.0;

        // signed distances depend only on the plane, so one field serves
        // every intersecting block of this class
        Grid<double> dist;
        bool have_dist = false;
        for (const auto& block : blocks) {
            if (classify_relation(std::span<const std::size_t>(block), plane) != Relation::Intersect)
                continue;
            if (!have_dist) {
                dist = signed_edt(plane);
                have_dist = true;
            }
            for (std::size_t p : block) q[p] = dist_to_prob(dist[p]);
        }
        out.planes.push_back(std::move(q));
    }

    if (normalize) {
        const std::size_t n = out.planes.front().size();
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (const auto& q : out.planes) sum += q[i];
            for (auto& q : out.planes) q[i] /= sum;
        }
        out.normalized = true;
    }
    return out;
}

namespace detail {

// separable truncated Gaussian, renormalized over the in-bounds support so
// constants are preserved at the borders; truncation radius floor(3*sigma)
inline void gaussian_blur_inplace(Grid<double>& g, double sigma) {
    const int radius = static_cast<int>(3.0 * sigma);
    if (radius < 1) return;
    std::vector<double> w(static_cast<std::size_t>(radius) + 1);
    for (int j = 0; j <= radius; ++j)
        w[static_cast<std::size_t>(j)] = std::exp(-0.5 * (j / sigma) * (j / sigma));

    const std::size_t nd = g.ndim();
    const auto strides = g.strides();
    std::vector<double> line, out;
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t axis = 0; axis < nd; ++axis) {
        const std::size_t len = g.dims()[axis];
        if (len == 1) continue;
        line.resize(len);
        out.resize(len);
        const std::size_t stride = strides[axis];
        const std::size_t n_lines = g.size() / len;
        for (std::size_t l = 0; l < n_lines; ++l) {
            std::size_t rem = l, base = 0;
            for (std::size_t a = nd; a-- > 0;) {
                if (a == axis) continue;
                coord[a] = rem % g.dims()[a];
                rem /= g.dims()[a];
                base += coord[a] * strides[a];
            }
            for (std::size_t i = 0; i < len; ++i) line[i] = g[base + i * stride];
            for (std::size_t i = 0; i < len; ++i) {
                double acc = 0.0, mass = 0.0;
                const int jlo = -std::min<int>(radius, static_cast<int>(i));
                const int jhi = std::min<int>(radius, static_cast<int>(len - 1 - i));
                for (int j = jlo; j <= jhi; ++j) {
                    const double wj = w[static_cast<std::size_t>(std::abs(j))];
                    acc += wj * line[static_cast<std::size_t>(static_cast<long>(i) + j)];
                    mass += wj;
                }
                out[i] = acc / mass;
            }
            for (std::size_t i = 0; i < len; ++i) g[base + i * stride] = out[i];
        }
    }
}

}  // namespace detail

inline SoftLabelStack gaussian_soften(const OneHotStack& hard, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_soften: sigma must be > 0");
    SoftLabelStack out;
    out.planes.reserve(hard.planes.size());
    for (const auto& plane : hard.planes) {
        Grid<double> q(plane.dims(), 0.0, plane.spacing());
        for (std::size_t i = 0; i < plane.size(); ++i) q[i] = plane[i] ? 1.0 : 0.0;
        detail::gaussian_blur_inplace(q, sigma);
        out.planes.push_back(std::move(q));
    }
    const std::size_t n = out.planes.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& q : out.planes) sum += q[i];
        for (auto& q : out.planes) q[i] /= sum;
    }
    out.normalized = true;
    return out;
}

}  // namespace softseg

#endif  // SOFTSEG_SOFTEN_HPP

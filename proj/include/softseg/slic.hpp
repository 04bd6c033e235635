#ifndef SOFTSEG_SLIC_HPP
#define SOFTSEG_SLIC_HPP

// SLIC-style superpixels: localized k-means in joint (feature, space)
// coordinates followed by connectivity enforcement, so the result is a
// partition of face-connected blocks with ids in [0, M-1].
//
// Distance: D^2 = d_f^2 + (d_s / S)^2 * m^2, with d_f the Euclidean feature
// distance on channels normalized to [0,1], d_s the spatial distance in
// pixels, S = (N / target_count)^(1/ndim) the expected block side, and m
// the compactness. Everything is deterministic: seeds start on a regular
// grid (continuous positions, perturbed to a strictly-lower-gradient pixel
// if one exists in the 3^ndim neighborhood), ties in the assignment go to
// the lowest center id.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "softseg/grid.hpp"

namespace softseg {

struct SlicParams {
    std::size_t target_count = 100;
    double compactness = 10.0;
    int max_iters = 10;
    double conn_min_fraction = 0.25;

    void validate() const {
        if (target_count < 1) throw std::invalid_argument("SlicParams: target_count must be >= 1");
        if (!(compactness > 0.0)) throw std::invalid_argument("SlicParams: compactness must be > 0");
        if (max_iters < 1) throw std::invalid_argument("SlicParams: max_iters must be >= 1");
        if (!(conn_min_fraction > 0.0) || conn_min_fraction > 1.0)
            throw std::invalid_argument("SlicParams: conn_min_fraction must be in (0, 1]");
    }
};

struct SuperpixelMap {
    Grid<std::int32_t> block_ids;
    std::int32_t num_blocks = 0;
};

namespace detail {

// Face-adjacency connected components of equal-id regions, labeled in
// raster order of first appearance.
inline std::pair<Grid<std::int32_t>, std::int32_t> label_components(
    const Grid<std::int32_t>& ids) {
    const std::size_t nd = ids.ndim();
    const auto strides = ids.strides();
    Grid<std::int32_t> comp(ids.dims(), -1, ids.spacing());
    std::int32_t next = 0;
    std::vector<std::size_t> stack;
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t start = 0; start < ids.size(); ++start) {
        if (comp[start] != -1) continue;
        const std::int32_t id = ids[start];
        comp[start] = next;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ids.coord_of(p, std::span<std::size_t>(coord.data(), nd));
            for (std::size_t a = 0; a < nd; ++a) {
                if (coord[a] > 0) {
                    const std::size_t q = p - strides[a];
                    if (comp[q] == -1 && ids[q] == id) {
                        comp[q] = next;
                        stack.push_back(q);
                    }
                }
                if (coord[a] + 1 < ids.dims()[a]) {
                    const std::size_t q = p + strides[a];
                    if (comp[q] == -1 && ids[q] == id) {
                        comp[q] = next;
                        stack.push_back(q);
                    }
                }
            }
        }
        ++next;
    }
    return {std::move(comp), next};
}

struct DisjointSet {
    std::vector<std::int32_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int32_t find(std::int32_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
};

}  // namespace detail

// Splits disconnected same-id regions into their own blocks, then absorbs
// components smaller than conn_min_fraction * (N / target_count) into their
// largest face-adjacent block. Ids are re-compacted to [0, M-1] in raster
// order of first appearance.
inline SuperpixelMap enforce_connectivity(const Grid<std::int32_t>& raw_ids,
                                          const SlicParams& params) {
    params.validate();
    auto [comp, n_comp] = detail::label_components(raw_ids);
    const double min_size = params.conn_min_fraction *
                            (static_cast<double>(raw_ids.size()) /
                             static_cast<double>(params.target_count));

    std::vector<std::size_t> size(static_cast<std::size_t>(n_comp), 0);
    for (std::size_t i = 0; i < comp.size(); ++i) ++size[static_cast<std::size_t>(comp[i])];

    // component adjacency over face neighbors (forward axes only)
    std::vector<std::vector<std::int32_t>> adj(static_cast<std::size_t>(n_comp));
    const std::size_t nd = comp.ndim();
    const auto strides = comp.strides();
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t p = 0; p < comp.size(); ++p) {
        comp.coord_of(p, std::span<std::size_t>(coord.data(), nd));
        for (std::size_t a = 0; a < nd; ++a) {
            if (coord[a] + 1 >= comp.dims()[a]) continue;
            const std::int32_t c1 = comp[p], c2 = comp[p + strides[a]];
            if (c1 != c2) {
                adj[static_cast<std::size_t>(c1)].push_back(c2);
                adj[static_cast<std::size_t>(c2)].push_back(c1);
            }
        }
    }
    for (auto& neighbors : adj) {
        std::sort(neighbors.begin(), neighbors.end());
        neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
    }

    detail::DisjointSet ds(static_cast<std::size_t>(n_comp));
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::int32_t c = 0; c < n_comp; ++c) {
            const std::int32_t root = ds.find(c);
            if (root != c) continue;  // only roots
            if (static_cast<double>(size[static_cast<std::size_t>(root)]) >= min_size) continue;
            // largest adjacent root, tie broken toward the smaller id
            std::int32_t best = -1;
            std::size_t best_size = 0;
            for (std::int32_t n0 = 0; n0 < n_comp; ++n0) {
                if (ds.find(n0) != root) continue;
                for (std::int32_t nb : adj[static_cast<std::size_t>(n0)]) {
                    const std::int32_t r = ds.find(nb);
                    if (r == root) continue;
                    if (size[static_cast<std::size_t>(r)] > best_size ||
                        (size[static_cast<std::size_t>(r)] == best_size && (best == -1 || r < best))) {
                        best = r;
                        best_size = size[static_cast<std::size_t>(r)];
                    }
                }
            }
            if (best == -1) continue;  // isolated component, keep it
            ds.parent[static_cast<std::size_t>(root)] = best;
            size[static_cast<std::size_t>(best)] += size[static_cast<std::size_t>(root)];
            merged = true;
        }
    }

    SuperpixelMap out;
    out.block_ids = Grid<std::int32_t>(raw_ids.dims(), -1, raw_ids.spacing());
    std::vector<std::int32_t> remap(static_cast<std::size_t>(n_comp), -1);
    std::int32_t next = 0;
    for (std::size_t p = 0; p < comp.size(); ++p) {
        const std::int32_t root = ds.find(comp[p]);
        if (remap[static_cast<std::size_t>(root)] == -1) remap[static_cast<std::size_t>(root)] = next++;
        out.block_ids[p] = remap[static_cast<std::size_t>(root)];
    }
    out.num_blocks = next;
    return out;
}

namespace detail {

struct SlicCenter {
    std::vector<double> feature;
    std::array<double, kMaxAxes> pos{};
};

inline double gradient_at(std::span<const Grid<double>> channels, std::size_t flat,
                          std::span<const std::size_t> coord) {
    const auto& g0 = channels.front();
    const std::size_t nd = g0.ndim();
    const auto strides = g0.strides();
    double g = 0.0;
    for (std::size_t a = 0; a < nd; ++a) {
        const std::size_t lo = coord[a] > 0 ? flat - strides[a] : flat;
        const std::size_t hi = coord[a] + 1 < g0.dims()[a] ? flat + strides[a] : flat;
        for (const auto& ch : channels) g += std::abs(ch[hi] - ch[lo]);
    }
    return g;
}

}  // namespace detail

inline SuperpixelMap slic_segment(std::span<const Grid<double>> channels,
                                  const SlicParams& params) {
    params.validate();
    if (channels.empty()) throw std::invalid_argument("slic_segment: no channels");
    const Grid<double>& first = channels.front();
    for (const auto& ch : channels) require_same_dims(first, ch, "slic_segment");
    const std::size_t n = first.size();
    const std::size_t nd = first.ndim();
    if (params.target_count > n)
        throw std::invalid_argument("slic_segment: target_count exceeds pixel count");

    // channels min-max normalized to [0,1]; a constant channel maps to 0
    std::vector<Grid<double>> feat;
    feat.reserve(channels.size());
    for (const auto& ch : channels) {
        auto [mn, mx] = std::minmax_element(ch.values().begin(), ch.values().end());
        Grid<double> f(ch.dims(), 0.0, ch.spacing());
        if (*mx > *mn) {
            const double scale = 1.0 / (*mx - *mn);
            for (std::size_t i = 0; i < n; ++i) f[i] = (ch[i] - *mn) * scale;
        }
        feat.push_back(std::move(f));
    }
    const std::size_t n_ch = feat.size();
    const AxisSizes& dims = first.dims();

    const double block_side =
        std::pow(static_cast<double>(n) / static_cast<double>(params.target_count),
                 1.0 / static_cast<double>(nd));

    // per-axis seed counts: floor(extent / S), then grow the axis with the
    // coarsest step until the product reaches target_count
    std::array<std::size_t, kMaxAxes> seeds_per_axis{};
    for (std::size_t a = 0; a < nd; ++a)
        seeds_per_axis[a] = std::max<std::size_t>(
            1, static_cast<std::size_t>(static_cast<double>(dims[a]) / block_side));
    auto seed_product = [&] {
        std::size_t p = 1;
        for (std::size_t a = 0; a < nd; ++a) p *= seeds_per_axis[a];
        return p;
    };
    while (seed_product() < params.target_count) {
        std::size_t grow = kMaxAxes;
        double coarsest = -1.0;
        for (std::size_t a = 0; a < nd; ++a) {
            if (seeds_per_axis[a] >= dims[a]) continue;
            const double step = static_cast<double>(dims[a]) / static_cast<double>(seeds_per_axis[a]);
            if (step >= coarsest) {
                coarsest = step;
                grow = a;
            }
        }
        if (grow == kMaxAxes) break;
        ++seeds_per_axis[grow];
    }

    std::array<double, kMaxAxes> step{};
    for (std::size_t a = 0; a < nd; ++a)
        step[a] = static_cast<double>(dims[a]) / static_cast<double>(seeds_per_axis[a]);

    // seeds on the regular grid, each moved to the strictly lowest-gradient
    // pixel of its 3^ndim neighborhood (unmoved seeds keep their continuous
    // position, which keeps the tiling symmetric on flat images)
    std::vector<detail::SlicCenter> centers;
    std::array<std::size_t, kMaxAxes> seed_idx{};
    const auto strides = first.strides();
    std::size_t n_seeds = seed_product();
    for (std::size_t s = 0; s < n_seeds; ++s) {
        std::size_t rem = s;
        for (std::size_t a = nd; a-- > 0;) {
            seed_idx[a] = rem % seeds_per_axis[a];
            rem /= seeds_per_axis[a];
        }
        detail::SlicCenter c;
        std::array<long, kMaxAxes> p0{};
        for (std::size_t a = 0; a < nd; ++a) {
            c.pos[a] = step[a] * (static_cast<double>(seed_idx[a]) + 0.5) - 0.5;
            p0[a] = std::clamp<long>(std::lround(c.pos[a]), 0, static_cast<long>(dims[a]) - 1);
        }
        std::array<std::size_t, kMaxAxes> cand{}, best{};
        std::size_t best_flat = 0;
        for (std::size_t a = 0; a < nd; ++a) {
            best[a] = static_cast<std::size_t>(p0[a]);
            best_flat += best[a] * strides[a];
        }
        double best_g = detail::gradient_at(feat, best_flat, std::span<const std::size_t>(best.data(), nd));
        bool moved = false;
        const std::size_t n_off = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(nd)) + 0.5);
        for (std::size_t o = 0; o < n_off; ++o) {
            std::size_t rem_o = o;
            bool in_bounds = true, all_zero = true;
            std::size_t flat = 0;
            for (std::size_t a = nd; a-- > 0;) {
                const long off = static_cast<long>(rem_o % 3) - 1;
                rem_o /= 3;
                const long q = p0[a] + off;
                if (off != 0) all_zero = false;
                if (q < 0 || q >= static_cast<long>(dims[a])) {
                    in_bounds = false;
                    break;
                }
                cand[a] = static_cast<std::size_t>(q);
                flat += cand[a] * strides[a];
            }
            if (!in_bounds || all_zero) continue;
            const double g = detail::gradient_at(feat, flat, std::span<const std::size_t>(cand.data(), nd));
            if (g < best_g) {
                best_g = g;
                best = cand;
                best_flat = flat;
                moved = true;
            }
        }
        if (moved)
            for (std::size_t a = 0; a < nd; ++a) c.pos[a] = static_cast<double>(best[a]);
        c.feature.resize(n_ch);
        for (std::size_t ch = 0; ch < n_ch; ++ch) c.feature[ch] = feat[ch][best_flat];
        centers.push_back(std::move(c));
    }

    const double spatial_w = (params.compactness / block_side) * (params.compactness / block_side);
    Grid<std::int32_t> labels(dims, -1, first.spacing());
    std::vector<double> dist(n);
    std::array<std::size_t, kMaxAxes> lo{}, hi{}, it{};

    auto assign = [&] {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        std::fill(labels.values().begin(), labels.values().end(), std::int32_t{-1});
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const auto& c = centers[k];
            for (std::size_t a = 0; a < nd; ++a) {
                const double half = std::max(block_side, step[a]);
                lo[a] = static_cast<std::size_t>(std::max(0.0, std::floor(c.pos[a] - half)));
                hi[a] = static_cast<std::size_t>(
                    std::min(static_cast<double>(dims[a]) - 1.0, std::ceil(c.pos[a] + half)));
                it[a] = lo[a];
            }
            bool more = true;
            while (more) {
                std::size_t flat = 0;
                double ds2 = 0.0;
                for (std::size_t a = 0; a < nd; ++a) {
                    flat += it[a] * strides[a];
                    const double dd = static_cast<double>(it[a]) - c.pos[a];
                    ds2 += dd * dd;
                }
                double df2 = 0.0;
                for (std::size_t ch = 0; ch < n_ch; ++ch) {
                    const double dd = feat[ch][flat] - c.feature[ch];
                    df2 += dd * dd;
                }
                const double d2 = df2 + ds2 * spatial_w;
                if (d2 < dist[flat]) {
                    dist[flat] = d2;
                    labels[flat] = static_cast<std::int32_t>(k);
                }
                // odometer over the window, last axis fastest
                more = false;
                for (std::size_t a = nd; a-- > 0;) {
                    if (it[a] < hi[a]) {
                        ++it[a];
                        more = true;
                        break;
                    }
                    it[a] = lo[a];
                }
            }
        }
        // pixels missed by every window fall back to the spatially nearest center
        std::array<std::size_t, kMaxAxes> coord{};
        for (std::size_t p = 0; p < n; ++p) {
            if (labels[p] != -1) continue;
            labels.coord_of(p, std::span<std::size_t>(coord.data(), nd));
            double best_d = std::numeric_limits<double>::infinity();
            std::int32_t best_k = 0;
            for (std::size_t k = 0; k < centers.size(); ++k) {
                double ds2 = 0.0;
                for (std::size_t a = 0; a < nd; ++a) {
                    const double dd = static_cast<double>(coord[a]) - centers[k].pos[a];
                    ds2 += dd * dd;
                }
                if (ds2 < best_d) {
                    best_d = ds2;
                    best_k = static_cast<std::int32_t>(k);
                }
            }
            labels[p] = best_k;
        }
    };

    auto update = [&] {
        std::vector<std::vector<double>> feat_sum(centers.size(), std::vector<double>(n_ch, 0.0));
        std::vector<std::array<double, kMaxAxes>> pos_sum(centers.size());
        std::vector<std::size_t> count(centers.size(), 0);
        for (auto& ps : pos_sum) ps.fill(0.0);
        std::array<std::size_t, kMaxAxes> coord{};
        for (std::size_t p = 0; p < n; ++p) {
            const auto k = static_cast<std::size_t>(labels[p]);
            labels.coord_of(p, std::span<std::size_t>(coord.data(), nd));
            for (std::size_t ch = 0; ch < n_ch; ++ch) feat_sum[k][ch] += feat[ch][p];
            for (std::size_t a = 0; a < nd; ++a) pos_sum[k][a] += static_cast<double>(coord[a]);
            ++count[k];
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (count[k] == 0) continue;  // empty cluster keeps its center
            const double inv = 1.0 / static_cast<double>(count[k]);
            for (std::size_t ch = 0; ch < n_ch; ++ch) centers[k].feature[ch] = feat_sum[k][ch] * inv;
            for (std::size_t a = 0; a < nd; ++a) centers[k].pos[a] = pos_sum[k][a] * inv;
        }
    };

    assign();
    for (int iter = 1; iter < params.max_iters; ++iter) {
        update();
        assign();
    }

    return enforce_connectivity(labels, params);
}

inline SuperpixelMap slic_segment(const Grid<double>& image, const SlicParams& params) {
    return slic_segment(std::span<const Grid<double>>(&image, 1), params);
}

}  // namespace softseg

#endif  // SOFTSEG_SLIC_HPP

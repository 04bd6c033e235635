#ifndef SOFTSEG_METRICS_HPP
#define SOFTSEG_METRICS_HPP

// Evaluation measures: Dice, volumetric similarity, and the surface-distance
// family (HD95 / ASD / ASSD) in physical mm. Surfaces reuse the sdt boundary
// rule so softening and evaluation agree on what "boundary" means.
//
// Conventions (the literature varies): HD95 is the max of the two directed
// 95th percentiles, percentiles interpolate linearly between order
// statistics, and classes with an empty mask (or no extractable surface) on
// either side report their distance metrics as absent rather than 0 or inf.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "softseg/grid.hpp"
#include "softseg/sdt.hpp"

namespace softseg {

template <typename T>
double dice_score(const Grid<T>& a, const Grid<T>& b) {
    require_same_dims(a, b, "dice_score");
    std::size_t na = 0, nb = 0, inter = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool fa = a[i] != 0, fb = b[i] != 0;
        na += fa;
        nb += fb;
        inter += fa && fb;
    }
    if (na + nb == 0) return 1.0;  // both empty: perfect agreement
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

template <typename T>
double volumetric_similarity(const Grid<T>& a, const Grid<T>& b) {
    require_same_dims(a, b, "volumetric_similarity");
    std::size_t na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] != 0;
        nb += b[i] != 0;
    }
    if (na + nb == 0) return 1.0;
    const double diff = na > nb ? static_cast<double>(na - nb) : static_cast<double>(nb - na);
    return 1.0 - diff / static_cast<double>(na + nb);
}

struct SurfaceDistances {
    std::vector<double> a_to_b;  // per boundary point of A, min mm-distance to B's surface
    std::vector<double> b_to_a;
};

// Directed surface-distance multisets in mm; exact Euclidean via the sdt
// transform sampled at the other surface's points.
template <typename T>
SurfaceDistances surface_distances(const Grid<T>& a, const Grid<T>& b,
                                   bool border_is_background = false) {
    require_same_dims(a, b, "surface_distances");
    if (a.spacing() != b.spacing())
        throw std::invalid_argument("surface_distances: spacing mismatch");
    const BoundarySet ba = extract_boundary(a, border_is_background);
    const BoundarySet bb = extract_boundary(b, border_is_background);
    if (ba.empty() || bb.empty())
        throw std::runtime_error("surface_distances: undefined for a mask without surface");
    const Grid<double> to_b = distance_to_point_set(a.dims(), a.spacing(), bb.coords);
    const Grid<double> to_a = distance_to_point_set(a.dims(), a.spacing(), ba.coords);
    SurfaceDistances out;
    out.a_to_b.reserve(ba.coords.size());
    out.b_to_a.reserve(bb.coords.size());
    for (std::size_t p : ba.coords) out.a_to_b.push_back(to_b[p]);
    for (std::size_t p : bb.coords) out.b_to_a.push_back(to_a[p]);
    return out;
}

// q-th percentile with linear interpolation between order statistics
inline double percentile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile_linear: empty sample");
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double hd95_of(const SurfaceDistances& d) {
    return std::max(percentile_linear(d.a_to_b, 0.95), percentile_linear(d.b_to_a, 0.95));
}

inline double asd_of(const SurfaceDistances& d) {
    double sum = 0.0;
    for (double v : d.a_to_b) sum += v;
    return sum / static_cast<double>(d.a_to_b.size());
}

inline double assd_of(const SurfaceDistances& d) {
    double sum = 0.0;
    for (double v : d.a_to_b) sum += v;
    for (double v : d.b_to_a) sum += v;
    return sum / static_cast<double>(d.a_to_b.size() + d.b_to_a.size());
}

template <typename T>
double hd95(const Grid<T>& a, const Grid<T>& b) {
    return hd95_of(surface_distances(a, b));
}

template <typename T>
double asd(const Grid<T>& a, const Grid<T>& b) {
    return asd_of(surface_distances(a, b));
}

template <typename T>
double assd(const Grid<T>& a, const Grid<T>& b) {
    return assd_of(surface_distances(a, b));
}

struct ClassMetrics {
    double dice = 0.0;
    double vs = 0.0;
    std::optional<double> hd95;  // absent when either mask lacks a surface
    std::optional<double> asd;
    std::optional<double> assd;
};

struct MetricReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics mean;  // distance means over classes where present
};

inline MetricReport evaluate_labels(const LabelMap& pred, const LabelMap& gt) {
    require_same_dims(pred.labels, gt.labels, "evaluate_labels");
    if (pred.num_classes != gt.num_classes)
        throw std::invalid_argument("evaluate_labels: class count mismatch");
    MetricReport report;
    report.per_class.resize(static_cast<std::size_t>(gt.num_classes));
    double dice_sum = 0.0, vs_sum = 0.0, hd_sum = 0.0, asd_sum = 0.0, assd_sum = 0.0;
    std::size_t dist_present = 0;
    for (std::int32_t c = 0; c < gt.num_classes; ++c) {
        Grid<std::uint8_t> ma(pred.labels.dims(), 0, pred.labels.spacing());
        Grid<std::uint8_t> mb(gt.labels.dims(), 0, gt.labels.spacing());
        bool any_a = false, any_b = false;
        for (std::size_t i = 0; i < ma.size(); ++i) {
            ma[i] = pred.labels[i] == c;
            mb[i] = gt.labels[i] == c;
            any_a |= ma[i] != 0;
            any_b |= mb[i] != 0;
        }
        auto& m = report.per_class[static_cast<std::size_t>(c)];
        m.dice = dice_score(ma, mb);
        m.vs = volumetric_similarity(ma, mb);
        dice_sum += m.dice;
        vs_sum += m.vs;
        if (any_a && any_b) {
            const BoundarySet sa = extract_boundary(ma), sb = extract_boundary(mb);
            if (!sa.empty() && !sb.empty()) {
                const SurfaceDistances d = surface_distances(ma, mb);
                m.hd95 = hd95_of(d);
                m.asd = asd_of(d);
                m.assd = assd_of(d);
                hd_sum += *m.hd95;
                asd_sum += *m.asd;
                assd_sum += *m.assd;
                ++dist_present;
            }
        }
    }
    const double nc = static_cast<double>(gt.num_classes);
    report.mean.dice = dice_sum / nc;
    report.mean.vs = vs_sum / nc;
    if (dist_present > 0) {
        report.mean.hd95 = hd_sum / static_cast<double>(dist_present);
        report.mean.asd = asd_sum / static_cast<double>(dist_present);
        report.mean.assd = assd_sum / static_cast<double>(dist_present);
    }
    return report;
}

}  // namespace softseg

#endif  // SOFTSEG_METRICS_HPP

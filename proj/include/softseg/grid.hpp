#ifndef SOFTSEG_GRID_HPP
#define SOFTSEG_GRID_HPP

// Dense lattice containers shared by every module: a scalar Grid over a
// 2D/3D lattice with per-axis physical spacing, integer label maps, and
// one-hot stacks. Storage is row-major with the last axis fastest, so
// serialized buffers are interchangeable across modules.

#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace softseg {

constexpr std::size_t kMaxAxes = 3;

using AxisSizes = std::vector<std::size_t>;
using AxisSpacing = std::vector<double>;

template <typename T>
class Grid {
public:
    Grid() = default;

    // spacing defaults to 1.0 mm per axis when the source carries none
    explicit Grid(AxisSizes dims, T fill = T{}, AxisSpacing spacing = {})
        : dims_(std::move(dims)), spacing_(std::move(spacing)) {
        if (dims_.empty() || dims_.size() > kMaxAxes)
            throw std::invalid_argument("Grid: expected 1 to 3 axes, got " +
                                        std::to_string(dims_.size()));
        for (std::size_t d : dims_)
            if (d == 0) throw std::invalid_argument("Grid: zero-sized axis");
        if (spacing_.empty()) spacing_.assign(dims_.size(), 1.0);
        if (spacing_.size() != dims_.size())
            throw std::invalid_argument("Grid: spacing/dims axis count mismatch");
        for (double s : spacing_)
            if (!(s > 0.0)) throw std::invalid_argument("Grid: spacing must be > 0");
        values_.assign(element_count(dims_), fill);
    }

    std::size_t ndim() const { return dims_.size(); }
    const AxisSizes& dims() const { return dims_; }
    const AxisSpacing& spacing() const { return spacing_; }
    std::size_t size() const { return values_.size(); }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }

    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    // last axis fastest
    std::array<std::size_t, kMaxAxes> strides() const {
        std::array<std::size_t, kMaxAxes> s{};
        std::size_t acc = 1;
        for (std::size_t a = dims_.size(); a-- > 0;) {
            s[a] = acc;
            acc *= dims_[a];
        }
        return s;
    }

    std::size_t flat(std::span<const std::size_t> coord) const {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < dims_.size(); ++a) idx = idx * dims_[a] + coord[a];
        return idx;
    }

    void coord_of(std::size_t flat_index, std::span<std::size_t> coord) const {
        for (std::size_t a = dims_.size(); a-- > 0;) {
            coord[a] = flat_index % dims_[a];
            flat_index /= dims_[a];
        }
    }

    static std::size_t element_count(const AxisSizes& dims) {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }

private:
    AxisSizes dims_;
    AxisSpacing spacing_;
    std::vector<T> values_;
};

template <typename A, typename B>
bool same_dims(const Grid<A>& a, const Grid<B>& b) {
    return a.dims() == b.dims();
}

template <typename A, typename B>
void require_same_dims(const Grid<A>& a, const Grid<B>& b, const char* where) {
    if (!same_dims(a, b))
        throw std::invalid_argument(std::string(where) + ": grid dimension mismatch");
}

// Integer category per pixel; the compact encoding of the one-hot stack Y.
struct LabelMap {
    Grid<std::int32_t> labels;
    std::int32_t num_classes = 0;

    void validate() const {
        if (num_classes < 2) throw std::invalid_argument("LabelMap: need at least 2 classes");
        for (std::int32_t v : labels.values())
            if (v < 0 || v >= num_classes)
                throw std::out_of_range("LabelMap: label " + std::to_string(v) +
                                        " outside [0, " + std::to_string(num_classes - 1) + "]");
    }
};

// C binary planes; every pixel is 1 in exactly one plane.
struct OneHotStack {
    std::vector<Grid<std::uint8_t>> planes;

    std::int32_t num_classes() const { return static_cast<std::int32_t>(planes.size()); }
    const AxisSizes& dims() const { return planes.front().dims(); }
    const AxisSpacing& spacing() const { return planes.front().spacing(); }
};

inline OneHotStack one_hot_encode(const LabelMap& map) {
    map.validate();
    OneHotStack stack;
    stack.planes.reserve(static_cast<std::size_t>(map.num_classes));
    for (std::int32_t c = 0; c < map.num_classes; ++c)
        stack.planes.emplace_back(map.labels.dims(), std::uint8_t{0}, map.labels.spacing());
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        stack.planes[static_cast<std::size_t>(map.labels[i])][i] = 1;
    return stack;
}

inline LabelMap argmax_labels(const OneHotStack& stack) {
    LabelMap map;
    map.num_classes = stack.num_classes();
    map.labels = Grid<std::int32_t>(stack.dims(), 0, stack.spacing());
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        std::int32_t best = 0;
        std::uint8_t best_v = stack.planes[0][i];
        for (std::int32_t c = 1; c < map.num_classes; ++c)
            if (stack.planes[static_cast<std::size_t>(c)][i] > best_v) {
                best_v = stack.planes[static_cast<std::size_t>(c)][i];
                best = c;
            }
        map.labels[i] = best;
    }
    return map;
}

// fraction_c = (sum_i y_i^c) / N; feeds the class-imbalance weighting
inline std::vector<double> class_frequencies(const OneHotStack& stack) {
    std::vector<double> freq(static_cast<std::size_t>(stack.num_classes()), 0.0);
    const double n = static_cast<double>(stack.planes.front().size());
    for (std::size_t c = 0; c < freq.size(); ++c) {
        std::size_t count = 0;
        for (std::uint8_t v : stack.planes[c].values()) count += v;
        freq[c] = static_cast<double>(count) / n;
    }
    return freq;
}

}  // namespace softseg

#endif  // SOFTSEG_GRID_HPP

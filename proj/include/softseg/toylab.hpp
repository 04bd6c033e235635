#ifndef SOFTSEG_TOYLAB_HPP
#define SOFTSEG_TOYLAB_HPP

// Desk-scale experiment lab: synthetic multi-blob images with deliberately
// corrupted boundary annotations, a per-pixel linear softmax segmenter
// trained with the combined loss, and the two ablation sweeps (soft-label
// weight beta, superpixel count). Training uses the corrupted annotation;
// evaluation is always against the clean ground truth, which is what lets
// label softening show a measurable effect at this scale.
//
// Every run is a pure function of (config, seed): the generator draws from
// a fixed splitmix/mt19937 sequence, training reduces in a fixed order, and
// sweep results are keyed by job index, so re-runs produce identical CSV
// bytes no matter how many worker threads execute them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "softseg/grid.hpp"
#include "softseg/losses.hpp"
#include "softseg/metrics.hpp"
#include "softseg/slic.hpp"
#include "softseg/soften.hpp"

namespace softseg::toylab {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LabelsMode { kHard, kGaussianSoft, kSuperpixelSoft };
enum class WeightingMode { kUniform, kEnet };

inline const char* to_string(LabelsMode m) {
    switch (m) {
        case LabelsMode::kHard:
            return "hard";
        case LabelsMode::kGaussianSoft:
            return "gaussian-soft";
        default:
            return "superpixel-soft";
    }
}

struct ExperimentConfig {
    std::size_t num_train = 6;
    std::size_t num_eval = 4;
    std::size_t image_size = 64;  // square 2D lattice
    std::int32_t num_classes = 2;
    std::size_t superpixel_count = 64;
    double compactness = 4.0;
    double alpha = 1.0;  // Dice weight
    double beta = 1.0;   // KL weight
    WeightingMode weighting = WeightingMode::kEnet;
    double learning_rate = 8.0;
    int epochs = 240;
    double corruption_magnitude = 2.5;
    double gaussian_sigma = 1.0;  // for the gaussian-soft arm
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    void validate() const {
        if (num_train < 1 || num_eval < 1 || image_size < 8)
            throw std::invalid_argument("ExperimentConfig: counts must be >= 1, image_size >= 8");
        if (num_classes < 2) throw std::invalid_argument("ExperimentConfig: need >= 2 classes");
        if (superpixel_count < 1)
            throw std::invalid_argument("ExperimentConfig: superpixel_count must be >= 1");
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("ExperimentConfig: learning_rate must be > 0");
        if (epochs < 1) throw std::invalid_argument("ExperimentConfig: epochs must be >= 1");
        if (corruption_magnitude < 0.0)
            throw std::invalid_argument("ExperimentConfig: corruption_magnitude must be >= 0");
        if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: empty seed list");
    }
};

struct SyntheticSample {
    Grid<double> image;
    LabelMap clean_gt;  // true shapes
    LabelMap noisy_gt;  // boundary-corrupted annotation used for training
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 output is pinned by the standard; the distributions are not,
// so uniforms and normals are derived by hand
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed) : gen(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {  // Box-Muller
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

// separable box mean, renormalized over the in-bounds support
inline Grid<double> box_smooth(const Grid<double>& g, int radius) {
    Grid<double> out = g;
    const std::size_t nd = g.ndim();
    const auto strides = out.strides();
    std::vector<double> line, res;
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t axis = 0; axis < nd; ++axis) {
        const std::size_t len = g.dims()[axis];
        if (len == 1) continue;
        line.resize(len);
        res.resize(len);
        const std::size_t stride = strides[axis];
        const std::size_t n_lines = out.size() / len;
        for (std::size_t l = 0; l < n_lines; ++l) {
            std::size_t rem = l, base = 0;
            for (std::size_t a = nd; a-- > 0;) {
                if (a == axis) continue;
                coord[a] = rem % out.dims()[a];
                rem /= out.dims()[a];
                base += coord[a] * strides[a];
            }
            for (std::size_t i = 0; i < len; ++i) line[i] = out[base + i * stride];
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t lo = i >= static_cast<std::size_t>(radius)
                                           ? i - static_cast<std::size_t>(radius)
                                           : 0;
                const std::size_t hi = std::min(len - 1, i + static_cast<std::size_t>(radius));
                double acc = 0.0;
                for (std::size_t j = lo; j <= hi; ++j) acc += line[j];
                res[i] = acc / static_cast<double>(hi - lo + 1);
            }
            for (std::size_t i = 0; i < len; ++i) out[base + i * stride] = res[i];
        }
    }
    return out;
}

// smooth per-axis displacement field: coarse random nodes, bilinear blend.
// The node grid is coarse (32 px) so whole boundary segments are dilated or
// eroded coherently, and roughly a third of the nodes are quiet, so some
// segments stay nearly clean while others move by several pixels. This is
// the heterogeneous annotation-uncertainty model.
struct DisplacementField {
    std::size_t node_step = 32;
    std::size_t rows = 0, cols = 0, nodes_y = 0, nodes_x = 0;
    std::vector<double> vy, vx;  // node values, row-major

    DisplacementField(std::size_t h, std::size_t w, double magnitude, Rng& rng)
        : rows(h), cols(w) {
        nodes_y = h / node_step + 2;
        nodes_x = w / node_step + 2;
        vy.resize(nodes_y * nodes_x);
        vx.resize(nodes_y * nodes_x);
        for (std::size_t i = 0; i < vy.size(); ++i) {
            const bool quiet = rng.uniform() < 0.5;
            const double ay = rng.uniform(-1.0, 1.0);
            const double ax = rng.uniform(-1.0, 1.0);
            vy[i] = quiet ? 0.0 : 3.4 * magnitude * ay;
            vx[i] = quiet ? 0.0 : 3.4 * magnitude * ax;
        }
    }

    void at(double y, double x, double& dy, double& dx) const {
        const double gy = y / static_cast<double>(node_step);
        const double gx = x / static_cast<double>(node_step);
        const auto iy = std::min(static_cast<std::size_t>(gy), nodes_y - 2);
        const auto ix = std::min(static_cast<std::size_t>(gx), nodes_x - 2);
        const double fy = gy - static_cast<double>(iy);
        const double fx = gx - static_cast<double>(ix);
        const auto id = [&](std::size_t r, std::size_t c) { return r * nodes_x + c; };
        dy = (1 - fy) * ((1 - fx) * vy[id(iy, ix)] + fx * vy[id(iy, ix + 1)]) +
             fy * ((1 - fx) * vy[id(iy + 1, ix)] + fx * vy[id(iy + 1, ix + 1)]);
        dx = (1 - fy) * ((1 - fx) * vx[id(iy, ix)] + fx * vx[id(iy, ix + 1)]) +
             fy * ((1 - fx) * vx[id(iy + 1, ix)] + fx * vx[id(iy + 1, ix + 1)]);
    }
};

}  // namespace detail

inline SyntheticSample gen_synthetic(std::uint64_t seed, const ExperimentConfig& config) {
    config.validate();
    detail::Rng rng(seed);
    const std::size_t s = config.image_size;
    const double fs = static_cast<double>(s);

    SyntheticSample sample;
    sample.seed = seed;
    sample.clean_gt.num_classes = config.num_classes;
    sample.clean_gt.labels = Grid<std::int32_t>({s, s}, 0);

    // one rotated ellipse per foreground class, later classes painted on top
    for (std::int32_t c = 1; c < config.num_classes; ++c) {
        const double cy = rng.uniform(0.30, 0.70) * fs;
        const double cx = rng.uniform(0.30, 0.70) * fs;
        const double ra = rng.uniform(0.16, 0.26) * fs;
        const double rb = rng.uniform(0.16, 0.26) * fs;
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (std::size_t y = 0; y < s; ++y)
            for (std::size_t x = 0; x < s; ++x) {
                const double dy = static_cast<double>(y) - cy;
                const double dx = static_cast<double>(x) - cx;
                const double u = (ct * dx + st * dy) / ra;
                const double v = (-st * dx + ct * dy) / rb;
                if (u * u + v * v <= 1.0) sample.clean_gt.labels[y * s + x] = c;
            }
    }

    // per-class base intensity + low-order bias field + pixel noise
    const double a1 = rng.uniform(-0.10, 0.10);
    const double a2 = rng.uniform(-0.10, 0.10);
    const double a3 = rng.uniform(-0.10, 0.10);
    sample.image = Grid<double>({s, s}, 0.0);
    const double denom = config.num_classes > 1 ? static_cast<double>(config.num_classes - 1) : 1.0;
    for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x) {
            const std::int32_t c = sample.clean_gt.labels[y * s + x];
            const double base = c == 0 ? 0.25 : 0.25 + 0.5 * static_cast<double>(c) / denom;
            const double ny = static_cast<double>(y) / fs - 0.5;
            const double nx = static_cast<double>(x) / fs - 0.5;
            const double bias = a1 * ny + a2 * nx + a3 * ny * nx;
            sample.image[y * s + x] = base + bias + 0.15 * rng.normal();
        }

    // annotation corruption: look up the clean label through a smooth random
    // displacement, so boundaries are locally dilated/eroded
    sample.noisy_gt.num_classes = config.num_classes;
    sample.noisy_gt.labels = Grid<std::int32_t>({s, s}, 0);
    if (config.corruption_magnitude > 0.0) {
        detail::DisplacementField field(s, s, config.corruption_magnitude, rng);
        for (std::size_t y = 0; y < s; ++y)
            for (std::size_t x = 0; x < s; ++x) {
                double dy = 0.0, dx = 0.0;
                field.at(static_cast<double>(y), static_cast<double>(x), dy, dx);
                const auto sy = static_cast<std::size_t>(std::clamp(
                    std::lround(static_cast<double>(y) + dy), 0L, static_cast<long>(s) - 1));
                const auto sx = static_cast<std::size_t>(std::clamp(
                    std::lround(static_cast<double>(x) + dx), 0L, static_cast<long>(s) - 1));
                sample.noisy_gt.labels[y * s + x] = sample.clean_gt.labels[sy * s + sx];
            }
    } else {
        sample.noisy_gt.labels = sample.clean_gt.labels;
    }
    return sample;
}

// features per pixel: raw intensity, box means at radius 1 and 3, and one
// normalized coordinate per axis (F = ndim + 3)
inline std::vector<Grid<double>> featurize(const Grid<double>& image) {
    std::vector<Grid<double>> feats;
    feats.push_back(image);
    feats.push_back(detail::box_smooth(image, 1));
    feats.push_back(detail::box_smooth(image, 3));
    const std::size_t nd = image.ndim();
    std::array<std::size_t, kMaxAxes> coord{};
    for (std::size_t a = 0; a < nd; ++a) {
        Grid<double> ramp(image.dims(), 0.0, image.spacing());
        const double denom = image.dims()[a] > 1 ? static_cast<double>(image.dims()[a] - 1) : 1.0;
        for (std::size_t i = 0; i < ramp.size(); ++i) {
            ramp.coord_of(i, std::span<std::size_t>(coord.data(), nd));
            ramp[i] = static_cast<double>(coord[a]) / denom;
        }
        feats.push_back(std::move(ramp));
    }
    return feats;
}

struct LinearSegmenter {
    std::int32_t num_classes = 0;
    std::size_t num_features = 0;
    std::vector<double> weights;  // [class][feature], row-major
    std::vector<double> bias;     // [class]

    double weight(std::int32_t c, std::size_t f) const {
        return weights[static_cast<std::size_t>(c) * num_features + f];
    }
};

namespace detail {

inline PredictionStack logits_of(const LinearSegmenter& model,
                                 std::span<const Grid<double>> feats) {
    PredictionStack out;
    const std::size_t n = feats.front().size();
    for (std::int32_t c = 0; c < model.num_classes; ++c) {
        Grid<double> plane(feats.front().dims(), 0.0, feats.front().spacing());
        for (std::size_t i = 0; i < n; ++i) {
            double z = model.bias[static_cast<std::size_t>(c)];
            for (std::size_t f = 0; f < model.num_features; ++f)
                z += model.weight(c, f) * feats[f][i];
            plane[i] = z;
        }
        out.planes.push_back(std::move(plane));
    }
    return out;
}

}  // namespace detail

inline LabelMap predict(const LinearSegmenter& model, const Grid<double>& image) {
    const auto feats = featurize(image);
    const PredictionStack logits = detail::logits_of(model, feats);
    LabelMap out;
    out.num_classes = model.num_classes;
    out.labels = Grid<std::int32_t>(image.dims(), 0, image.spacing());
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        std::int32_t best = 0;
        double best_z = logits.planes[0][i];
        for (std::int32_t c = 1; c < model.num_classes; ++c)
            if (logits.planes[static_cast<std::size_t>(c)][i] > best_z) {
                best_z = logits.planes[static_cast<std::size_t>(c)][i];
                best = c;
            }
        out.labels[i] = best;
    }
    return out;
}

// Full-batch gradient descent on the combined loss. The step is accepted
// only if the loss does not increase by more than 1e-6; otherwise it is
// retried with a halved learning rate. A non-finite loss aborts.
inline LinearSegmenter train(std::span<const SyntheticSample> samples, LabelsMode mode,
                             const ExperimentConfig& config) {
    config.validate();
    if (samples.empty()) throw std::invalid_argument("train: need at least one sample");

    // concatenate all training pixels into flat 1-axis grids
    std::size_t total = 0;
    for (const auto& smp : samples) total += smp.image.size();
    const std::size_t n_feat = featurize(samples.front().image).size();
    std::vector<Grid<double>> feats(n_feat, Grid<double>({total}, 0.0));
    OneHotStack hard;
    for (std::int32_t c = 0; c < config.num_classes; ++c)
        hard.planes.emplace_back(AxisSizes{total}, std::uint8_t{0});
    SoftLabelStack soft;
    const bool need_soft = mode != LabelsMode::kHard;
    if (need_soft)
        for (std::int32_t c = 0; c < config.num_classes; ++c)
            soft.planes.emplace_back(AxisSizes{total}, 0.0);

    std::size_t offset = 0;
    for (const auto& smp : samples) {
        const auto sample_feats = featurize(smp.image);
        const OneHotStack sample_hard = one_hot_encode(smp.noisy_gt);
        SoftLabelStack sample_soft;
        if (mode == LabelsMode::kGaussianSoft) {
            sample_soft = gaussian_soften(sample_hard, config.gaussian_sigma);
        } else if (mode == LabelsMode::kSuperpixelSoft) {
            SlicParams sp_params;
            sp_params.target_count = config.superpixel_count;
            sp_params.compactness = config.compactness;
            const SuperpixelMap sp = slic_segment(smp.image, sp_params);
            sample_soft = soften(sample_hard, sp, /*normalize=*/true);
        }
        const std::size_t n = smp.image.size();
        for (std::size_t f = 0; f < n_feat; ++f)
            for (std::size_t i = 0; i < n; ++i) feats[f][offset + i] = sample_feats[f][i];
        for (std::int32_t c = 0; c < config.num_classes; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            for (std::size_t i = 0; i < n; ++i) {
                hard.planes[uc][offset + i] = sample_hard.planes[uc][i];
                if (need_soft) soft.planes[uc][offset + i] = sample_soft.planes[uc][i];
            }
        }
        offset += n;
    }

    LossWeights weights;
    weights.alpha = config.alpha;
    weights.beta = mode == LabelsMode::kHard ? 0.0 : config.beta;
    if (config.weighting == WeightingMode::kEnet)
        weights.class_weights = class_weights_enet(class_frequencies(hard));

    LinearSegmenter model;
    model.num_classes = config.num_classes;
    model.num_features = n_feat;
    model.weights.assign(static_cast<std::size_t>(config.num_classes) * n_feat, 0.0);
    model.bias.assign(static_cast<std::size_t>(config.num_classes), 0.0);

    auto eval_loss = [&](const LinearSegmenter& m) {
        return combined_loss(hard, soft, detail::logits_of(m, feats), weights);
    };

    double lr = config.learning_rate;
    LossResult cur = eval_loss(model);
    if (!std::isfinite(cur.value))
        throw DivergenceError("train: non-finite loss at initialization");

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // gradient w.r.t. weights and biases from the logit gradient
        std::vector<double> gw(model.weights.size(), 0.0), gb(model.bias.size(), 0.0);
        for (std::int32_t c = 0; c < config.num_classes; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            const auto& gz = cur.logit_grad[uc];
            for (std::size_t i = 0; i < total; ++i) {
                const double g = gz[i];
                gb[uc] += g;
                for (std::size_t f = 0; f < n_feat; ++f) gw[uc * n_feat + f] += g * feats[f][i];
            }
        }

        int retries = 0;
        while (true) {
            LinearSegmenter trial = model;
            for (std::size_t k = 0; k < trial.weights.size(); ++k)
                trial.weights[k] -= lr * gw[k];
            for (std::size_t k = 0; k < trial.bias.size(); ++k) trial.bias[k] -= lr * gb[k];
            LossResult next = eval_loss(trial);
            if (std::isfinite(next.value) && next.value <= cur.value + 1e-6) {
                model = std::move(trial);
                cur = std::move(next);
                break;
            }
            lr *= 0.5;
            if (++retries > 60 || lr <= 0.0)
                throw DivergenceError("train: loss failed to decrease after 60 step halvings (" +
                                      std::string(to_string(mode)) + " mode)");
        }
    }
    return model;
}

// per-sample evaluation against the clean ground truth, averaged; distance
// metrics average over the (sample, class) pairs where they are defined
inline MetricReport evaluate(const LinearSegmenter& model,
                             std::span<const SyntheticSample> samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
    std::vector<MetricReport> reports;
    reports.reserve(samples.size());
    for (const auto& smp : samples)
        reports.push_back(evaluate_labels(predict(model, smp.image), smp.clean_gt));

    MetricReport avg;
    const std::size_t nc = reports.front().per_class.size();
    avg.per_class.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        double dice = 0.0, vs = 0.0, hd = 0.0, as = 0.0, ass = 0.0;
        std::size_t present = 0;
        for (const auto& r : reports) {
            dice += r.per_class[c].dice;
            vs += r.per_class[c].vs;
            if (r.per_class[c].hd95) {
                hd += *r.per_class[c].hd95;
                as += *r.per_class[c].asd;
                ass += *r.per_class[c].assd;
                ++present;
            }
        }
        auto& m = avg.per_class[c];
        m.dice = dice / static_cast<double>(reports.size());
        m.vs = vs / static_cast<double>(reports.size());
        if (present > 0) {
            m.hd95 = hd / static_cast<double>(present);
            m.asd = as / static_cast<double>(present);
            m.assd = ass / static_cast<double>(present);
        }
    }
    double dice = 0.0, vs = 0.0, hd = 0.0, as = 0.0, ass = 0.0;
    std::size_t present = 0;
    for (const auto& m : avg.per_class) {
        dice += m.dice;
        vs += m.vs;
        if (m.hd95) {
            hd += *m.hd95;
            as += *m.asd;
            ass += *m.assd;
            ++present;
        }
    }
    avg.mean.dice = dice / static_cast<double>(nc);
    avg.mean.vs = vs / static_cast<double>(nc);
    if (present > 0) {
        avg.mean.hd95 = hd / static_cast<double>(present);
        avg.mean.asd = as / static_cast<double>(present);
        avg.mean.assd = ass / static_cast<double>(present);
    }
    return avg;
}

inline std::uint64_t sample_seed(std::uint64_t run_seed, std::size_t index) {
    std::uint64_t state = run_seed ^ (0xd1b54a32d192ed03ULL * (index + 1));
    return detail::splitmix64(state);
}

// one (config, seed, mode) run: generate, train, evaluate
inline MetricReport run_experiment(const ExperimentConfig& config, LabelsMode mode,
                                   std::uint64_t seed) {
    config.validate();
    std::vector<SyntheticSample> train_set, eval_set;
    for (std::size_t i = 0; i < config.num_train; ++i)
        train_set.push_back(gen_synthetic(sample_seed(seed, i), config));
    for (std::size_t i = 0; i < config.num_eval; ++i)
        eval_set.push_back(gen_synthetic(sample_seed(seed, config.num_train + i), config));
    const LinearSegmenter model = train(train_set, mode, config);
    return evaluate(model, eval_set);
}

struct SweepRow {
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    double dice = 0.0, vs = 0.0;
    std::optional<double> hd95, asd, assd;
};

namespace detail {

inline void parallel_jobs(std::size_t n_jobs, const std::function<void(std::size_t)>& job) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n_jobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_jobs) return;
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline SweepRow row_from_report(double value, std::uint64_t seed, const MetricReport& r) {
    SweepRow row;
    row.sweep_value = value;
    row.seed = seed;
    row.dice = r.mean.dice;
    row.vs = r.mean.vs;
    row.hd95 = r.mean.hd95;
    row.asd = r.mean.asd;
    row.assd = r.mean.assd;
    return row;
}

inline std::string fmt_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string fmt_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_fixed(*v) : std::string();
}

// divergence reports name the failing (sweep value, seed) pair
template <typename Fn>
auto with_sweep_context(double value, std::uint64_t seed, Fn&& fn) {
    try {
        return fn();
    } catch (const DivergenceError& e) {
        throw DivergenceError("(sweep value " + fmt_value(value) + ", seed " +
                              std::to_string(seed) + "): " + e.what());
    }
}

}  // namespace detail

// rows ordered by (sweep value, seed); results are keyed by job index, so
// the output is independent of worker scheduling
inline std::vector<SweepRow> sweep_beta(const ExperimentConfig& config,
                                        std::span<const double> betas) {
    config.validate();
    std::vector<SweepRow> rows(betas.size() * config.seeds.size());
    detail::parallel_jobs(rows.size(), [&](std::size_t idx) {
        const std::size_t bi = idx / config.seeds.size();
        const std::size_t si = idx % config.seeds.size();
        ExperimentConfig local = config;
        local.beta = betas[bi];
        const MetricReport r = detail::with_sweep_context(betas[bi], config.seeds[si], [&] {
            return run_experiment(local, LabelsMode::kSuperpixelSoft, config.seeds[si]);
        });
        rows[idx] = detail::row_from_report(betas[bi], config.seeds[si], r);
    });
    return rows;
}

inline std::vector<SweepRow> sweep_superpixels(const ExperimentConfig& config,
                                               std::span<const std::size_t> counts) {
    config.validate();
    std::vector<SweepRow> rows(counts.size() * config.seeds.size());
    detail::parallel_jobs(rows.size(), [&](std::size_t idx) {
        const std::size_t ci = idx / config.seeds.size();
        const std::size_t si = idx % config.seeds.size();
        ExperimentConfig local = config;
        local.superpixel_count = counts[ci];
        const auto value = static_cast<double>(counts[ci]);
        const MetricReport r = detail::with_sweep_context(value, config.seeds[si], [&] {
            return run_experiment(local, LabelsMode::kSuperpixelSoft, config.seeds[si]);
        });
        rows[idx] = detail::row_from_report(value, config.seeds[si], r);
    });
    return rows;
}

inline void write_raw_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "sweep_value,seed,dice,vs,hd95,asd,assd\n";
    for (const auto& r : rows)
        out << detail::fmt_value(r.sweep_value) << ',' << r.seed << ','
            << detail::fmt_fixed(r.dice) << ',' << detail::fmt_fixed(r.vs) << ','
            << detail::fmt_opt(r.hd95) << ',' << detail::fmt_opt(r.asd) << ','
            << detail::fmt_opt(r.assd) << '\n';
}

inline void write_summary_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "sweep_value,n,dice_mean,dice_std,vs_mean,vs_std,hd95_mean,hd95_std,"
           "asd_mean,asd_std,assd_mean,assd_std\n";
    std::vector<double> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.sweep_value) == order.end())
            order.push_back(r.sweep_value);
    for (double v : order) {
        std::size_t n = 0;
        struct Acc {
            double sum = 0.0, sq = 0.0;
            std::size_t n = 0;
            void add(double x) {
                sum += x;
                sq += x * x;
                ++n;
            }
            double mean() const { return sum / static_cast<double>(n); }
            double stddev() const {
                if (n < 2) return 0.0;
                const double m = mean();
                const double var = (sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
                return var > 0.0 ? std::sqrt(var) : 0.0;
            }
        } dice, vs, hd, as, ass;
        for (const auto& r : rows) {
            if (r.sweep_value != v) continue;
            ++n;
            dice.add(r.dice);
            vs.add(r.vs);
            if (r.hd95) hd.add(*r.hd95);
            if (r.asd) as.add(*r.asd);
            if (r.assd) ass.add(*r.assd);
        }
        auto opt_pair = [](const Acc& a) {
            if (a.n == 0) return std::string(",");
            return detail::fmt_fixed(a.mean()) + "," + detail::fmt_fixed(a.stddev());
        };
        out << detail::fmt_value(v) << ',' << n << ',' << detail::fmt_fixed(dice.mean()) << ','
            << detail::fmt_fixed(dice.stddev()) << ',' << detail::fmt_fixed(vs.mean()) << ','
            << detail::fmt_fixed(vs.stddev()) << ',' << opt_pair(hd) << ',' << opt_pair(as) << ','
            << opt_pair(ass) << '\n';
    }
}

}  // namespace softseg::toylab

#endif  // SOFTSEG_TOYLAB_HPP

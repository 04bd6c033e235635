// softseg command-line front end.
//
// Subcommands: slic, soften, metrics, toy (run | sweep-beta |
// sweep-superpixels). Standard output carries human-readable summaries
// only; machine-readable data goes to the --output / --out paths.
// Exit codes: 0 success, 2 usage or input error, 3 data-consistency error,
// 4 runtime or numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "softseg/config.hpp"
#include "softseg/grid.hpp"
#include "softseg/io.hpp"
#include "softseg/metrics.hpp"
#include "softseg/slic.hpp"
#include "softseg/soften.hpp"
#include "softseg/toylab.hpp"

namespace {

using namespace softseg;

bool is_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0).get(m1);
    return m0 == 'P' && m1 == '5';
}

std::vector<Grid<double>> read_channels(const std::string& path) {
    if (is_pgm(path)) {
        const Grid<std::uint16_t> raw = pgm::read(path);
        Grid<double> g(raw.dims(), 0.0, raw.spacing());
        for (std::size_t i = 0; i < raw.size(); ++i) g[i] = raw[i];
        return {std::move(g)};
    }
    return vox::to_channels(vox::read(path), path);
}

LabelMap read_labels(const std::string& path, std::int32_t classes) {
    LabelMap map;
    if (is_pgm(path)) {
        const Grid<std::uint16_t> raw = pgm::read(path);
        map.num_classes = classes;
        map.labels = Grid<std::int32_t>(raw.dims(), 0, raw.spacing());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] >= classes)
                throw DataError(path + ": label value " + std::to_string(raw[i]) +
                                " inconsistent with --classes " + std::to_string(classes));
            map.labels[i] = raw[i];
        }
        return map;
    }
    return vox::to_label_map(vox::read(path), classes, path);
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

std::string fmt_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int cmd_slic(const std::string& input, std::size_t count, double compactness, int iters,
             const std::string& output) {
    SlicParams params;
    params.target_count = count;
    params.compactness = compactness;
    params.max_iters = iters;
    const auto channels = read_channels(input);
    const SuperpixelMap sp =
        slic_segment(std::span<const Grid<double>>(channels.data(), channels.size()), params);
    vox::write(output, vox::from_superpixel_map(sp));
    std::cout << "M = " << sp.num_blocks << "\n";
    return 0;
}

int cmd_soften(const std::string& gt_path, const std::string& sp_path, std::int32_t classes,
               bool normalize, const std::string& method, double sigma,
               const std::string& output) {
    if (classes < 2) throw std::invalid_argument("--classes must be >= 2");
    const LabelMap gt = read_labels(gt_path, classes);
    const OneHotStack hard = one_hot_encode(gt);
    SoftLabelStack soft;
    if (method == "sp") {
        if (sp_path.empty())
            throw std::invalid_argument("--superpixels is required with --method sp");
        const SuperpixelMap sp = vox::to_superpixel_map(vox::read(sp_path), sp_path);
        if (sp.block_ids.dims() != gt.labels.dims())
            throw DataError(sp_path + ": superpixel dims do not match " + gt_path);
        soft = soften(hard, sp, normalize);
    } else if (method == "gaussian") {
        soft = gaussian_soften(hard, sigma);
    } else {
        throw std::invalid_argument("--method must be 'sp' or 'gaussian'");
    }
    vox::write(output, vox::from_soft_stack(soft));
    std::cout << "soft stack: " << classes << " planes over "
              << gt.labels.size() << " pixels\n";
    return 0;
}

int cmd_metrics(const std::string& pred_path, const std::string& gt_path, std::int32_t classes,
                const std::string& csv_out) {
    if (classes < 2) throw std::invalid_argument("--classes must be >= 2");
    const LabelMap pred = read_labels(pred_path, classes);
    const LabelMap gt = read_labels(gt_path, classes);
    if (pred.labels.dims() != gt.labels.dims())
        throw DataError(pred_path + ": dims do not match " + gt_path);
    if (pred.labels.spacing() != gt.labels.spacing())
        throw DataError(pred_path + ": spacing does not match " + gt_path);
    const MetricReport report = evaluate_labels(pred, gt);

    std::ofstream out(csv_out, std::ios::trunc);
    if (!out) throw IoError("cannot open " + csv_out + " for writing");
    out << "class,dice,vs,hd95,asd,assd\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& m = report.per_class[c];
        out << c << ',' << fmt_fixed(m.dice) << ',' << fmt_fixed(m.vs) << ',' << fmt_opt(m.hd95)
            << ',' << fmt_opt(m.asd) << ',' << fmt_opt(m.assd) << '\n';
    }
    out << "mean," << fmt_fixed(report.mean.dice) << ',' << fmt_fixed(report.mean.vs) << ','
        << fmt_opt(report.mean.hd95) << ',' << fmt_opt(report.mean.asd) << ','
        << fmt_opt(report.mean.assd) << '\n';

    // conventions note (stdout is the human-readable report header)
    std::cout << "metrics: surfaces are foreground pixels with a background face-neighbor;\n"
              << "         HD95 = max of the two directed 95th percentiles (linear\n"
              << "         interpolation); distances in mm; absent classes left empty\n"
              << "mean dice = " << fmt_fixed(report.mean.dice) << "\n";
    return 0;
}

toylab::ExperimentConfig config_from_file(const std::string& path, std::string* mode_out) {
    static const std::set<std::string> known = {
        "num_train",         "num_eval",       "image_size", "num_classes",
        "superpixel_count",  "compactness",    "alpha",      "beta",
        "weighting",         "learning_rate",  "epochs",     "corruption_magnitude",
        "gaussian_sigma",    "mode"};
    toylab::ExperimentConfig cfg;
    if (path.empty()) return cfg;
    const ConfigFile file = parse_config_file(path, known);
    cfg.num_train = static_cast<std::size_t>(file.get_int("num_train", static_cast<long>(cfg.num_train)));
    cfg.num_eval = static_cast<std::size_t>(file.get_int("num_eval", static_cast<long>(cfg.num_eval)));
    cfg.image_size = static_cast<std::size_t>(file.get_int("image_size", static_cast<long>(cfg.image_size)));
    cfg.num_classes = static_cast<std::int32_t>(file.get_int("num_classes", cfg.num_classes));
    cfg.superpixel_count =
        static_cast<std::size_t>(file.get_int("superpixel_count", static_cast<long>(cfg.superpixel_count)));
    cfg.compactness = file.get_double("compactness", cfg.compactness);
    cfg.alpha = file.get_double("alpha", cfg.alpha);
    cfg.beta = file.get_double("beta", cfg.beta);
    cfg.learning_rate = file.get_double("learning_rate", cfg.learning_rate);
    cfg.epochs = static_cast<int>(file.get_int("epochs", cfg.epochs));
    cfg.corruption_magnitude = file.get_double("corruption_magnitude", cfg.corruption_magnitude);
    cfg.gaussian_sigma = file.get_double("gaussian_sigma", cfg.gaussian_sigma);
    const std::string weighting = file.get("weighting", "enet");
    if (weighting == "uniform")
        cfg.weighting = toylab::WeightingMode::kUniform;
    else if (weighting == "enet")
        cfg.weighting = toylab::WeightingMode::kEnet;
    else
        throw IoError("config: weighting must be 'uniform' or 'enet'");
    if (mode_out && file.has("mode")) *mode_out = file.get("mode", *mode_out);
    return cfg;
}

toylab::LabelsMode mode_from_string(const std::string& s) {
    if (s == "hard") return toylab::LabelsMode::kHard;
    if (s == "gaussian") return toylab::LabelsMode::kGaussianSoft;
    if (s == "superpixel") return toylab::LabelsMode::kSuperpixelSoft;
    throw std::invalid_argument("mode must be 'hard', 'gaussian', or 'superpixel'");
}

void write_sweep_outputs(const std::string& out_prefix,
                         std::span<const toylab::SweepRow> rows) {
    const std::string raw_path = out_prefix + ".raw.csv";
    const std::string summary_path = out_prefix + ".summary.csv";
    std::ofstream raw(raw_path, std::ios::trunc);
    if (!raw) throw IoError("cannot open " + raw_path + " for writing");
    toylab::write_raw_csv(raw, rows);
    std::ofstream summary(summary_path, std::ios::trunc);
    if (!summary) throw IoError("cannot open " + summary_path + " for writing");
    toylab::write_summary_csv(summary, rows);
    std::cout << "wrote " << raw_path << " and " << summary_path << "\n";
}

std::vector<std::uint64_t> seed_range(int n) {
    if (n < 1) throw std::invalid_argument("--seeds must be >= 1");
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) seeds[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i);
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superpixel-guided label softening toolkit"};
    app.require_subcommand(1);

    // slic
    auto* slic = app.add_subcommand("slic", "generate a superpixel partition");
    std::string slic_input, slic_output;
    std::size_t slic_count = 100;
    double slic_compactness = 10.0;
    int slic_iters = 10;
    slic->add_option("--input", slic_input, "input image (PGM P5 or SVXB)")->required();
    slic->add_option("--count", slic_count, "requested superpixel count");
    slic->add_option("--compactness", slic_compactness, "spatial-vs-feature tradeoff");
    slic->add_option("--iters", slic_iters, "k-means iterations");
    slic->add_option("--output", slic_output, "output SVXB path")->required();

    // soften
    auto* soften_cmd = app.add_subcommand("soften", "convert hard labels to soft labels");
    std::string soften_gt, soften_sp, soften_method = "sp", soften_output;
    std::int32_t soften_classes = 2;
    bool soften_normalize = true;
    double soften_sigma = 1.0;
    soften_cmd->add_option("--gt", soften_gt, "hard annotation (PGM or SVXB)")->required();
    soften_cmd->add_option("--superpixels", soften_sp, "superpixel SVXB (for --method sp)");
    soften_cmd->add_option("--classes", soften_classes, "number of classes C")->required();
    soften_cmd->add_option("--normalize", soften_normalize, "renormalize across classes");
    soften_cmd->add_option("--method", soften_method, "'sp' or 'gaussian'");
    soften_cmd->add_option("--sigma", soften_sigma, "Gaussian sigma in pixels");
    soften_cmd->add_option("--output", soften_output, "output SVXB path")->required();

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "evaluate a prediction against ground truth");
    std::string metrics_pred, metrics_gt, metrics_csv;
    std::int32_t metrics_classes = 2;
    metrics_cmd->add_option("--pred", metrics_pred, "predicted labels (PGM or SVXB)")->required();
    metrics_cmd->add_option("--gt", metrics_gt, "ground-truth labels (PGM or SVXB)")->required();
    metrics_cmd->add_option("--classes", metrics_classes, "number of classes C")->required();
    metrics_cmd->add_option("--csv-out", metrics_csv, "output CSV path")->required();

    // toy
    auto* toy = app.add_subcommand("toy", "desk-scale experiment lab");
    toy->require_subcommand(1);
    std::string toy_config, toy_out = "toy";
    int toy_seeds = 10;
    auto* toy_run = toy->add_subcommand("run", "single configuration over the seed list");
    auto* toy_beta = toy->add_subcommand("sweep-beta", "sweep the soft-label loss weight");
    auto* toy_sp = toy->add_subcommand("sweep-superpixels", "sweep the superpixel count");
    std::string run_mode = "superpixel";
    double run_beta = -1.0;  // <0 keeps the config value
    std::string beta_list, count_list;
    for (auto* sub : {toy_run, toy_beta, toy_sp}) {
        sub->add_option("--config", toy_config, "key = value config file");
        sub->add_option("--seeds", toy_seeds, "number of seeds (0..n-1)");
        sub->add_option("--out", toy_out, "output prefix for <out>.raw.csv / <out>.summary.csv");
    }
    toy_run->add_option("--mode", run_mode, "'hard', 'gaussian', or 'superpixel'");
    toy_run->add_option("--beta", run_beta, "override the KL weight");
    toy_beta->add_option("--betas", beta_list, "comma-separated beta values");
    toy_sp->add_option("--counts", count_list, "comma-separated superpixel counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (slic->parsed()) {
            if (slic_count < 1) throw std::invalid_argument("--count must be >= 1");
            if (slic_iters < 1) throw std::invalid_argument("--iters must be >= 1");
            if (!(slic_compactness > 0.0))
                throw std::invalid_argument("--compactness must be > 0");
            return cmd_slic(slic_input, slic_count, slic_compactness, slic_iters, slic_output);
        }
        if (soften_cmd->parsed())
            return cmd_soften(soften_gt, soften_sp, soften_classes, soften_normalize,
                              soften_method, soften_sigma, soften_output);
        if (metrics_cmd->parsed())
            return cmd_metrics(metrics_pred, metrics_gt, metrics_classes, metrics_csv);
        if (toy->parsed()) {
            std::string config_mode = "superpixel";
            toylab::ExperimentConfig cfg = config_from_file(toy_config, &config_mode);
            cfg.seeds = seed_range(toy_seeds);
            if (toy_run->parsed()) {
                const std::string mode_str =
                    toy_run->count("--mode") ? run_mode : config_mode;
                if (run_beta >= 0.0) cfg.beta = run_beta;
                const toylab::LabelsMode mode = mode_from_string(mode_str);
                std::vector<toylab::SweepRow> rows(cfg.seeds.size());
                for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
                    const MetricReport r =
                        toylab::detail::with_sweep_context(cfg.beta, cfg.seeds[i], [&] {
                            return toylab::run_experiment(cfg, mode, cfg.seeds[i]);
                        });
                    rows[i] = toylab::detail::row_from_report(cfg.beta, cfg.seeds[i], r);
                }
                write_sweep_outputs(toy_out, rows);
                return 0;
            }
            if (toy_beta->parsed()) {
                std::vector<double> betas = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
                if (!beta_list.empty()) {
                    betas.clear();
                    std::stringstream ss(beta_list);
                    std::string tok;
                    while (std::getline(ss, tok, ',')) betas.push_back(std::stod(tok));
                }
                write_sweep_outputs(toy_out, toylab::sweep_beta(cfg, betas));
                return 0;
            }
            if (toy_sp->parsed()) {
                std::vector<std::size_t> counts = {25, 50, 100, 200, 400};
                if (!count_list.empty()) {
                    counts.clear();
                    std::stringstream ss(count_list);
                    std::string tok;
                    while (std::getline(ss, tok, ','))
                        counts.push_back(static_cast<std::size_t>(std::stoul(tok)));
                }
                write_sweep_outputs(toy_out, toylab::sweep_superpixels(cfg, counts));
                return 0;
            }
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const toylab::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

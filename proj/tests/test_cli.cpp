#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "softseg/io.hpp"
#include "softseg/soften.hpp"

#include "oracles.hpp"

using namespace softseg;

namespace {

namespace fs = std::filesystem;

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "softseg_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args) {
    const auto out_path = work_dir() / "stdout.txt";
    const auto err_path = work_dir() / "stderr.txt";
    const std::string cmd = std::string(SOFTSEG_CLI_PATH) + " " + args + " > " +
                            out_path.string() + " 2> " + err_path.string();
    const int rc = std::system(cmd.c_str());
    CmdResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = slurp(out_path);
    res.err = slurp(err_path);
    return res;
}

// the 1x6 toy annotation as an SVXB label file
fs::path write_toy_gt() {
    LabelMap map;
    map.num_classes = 2;
    map.labels = Grid<std::int32_t>({1, 6}, 0);
    map.labels[2] = map.labels[3] = map.labels[4] = 1;
    const auto path = work_dir() / "toy_gt.svxb";
    vox::write(path.string(), vox::from_label_map(map));
    return path;
}

fs::path write_single_block_sp() {
    SuperpixelMap sp;
    sp.block_ids = Grid<std::int32_t>({1, 6}, 0);
    sp.num_blocks = 1;
    const auto path = work_dir() / "toy_sp.svxb";
    vox::write(path.string(), vox::from_superpixel_map(sp));
    return path;
}

}  // namespace

TEST_CASE("cli slic on a constant pgm prints the block count") {
    const auto pgm_path = work_dir() / "flat.pgm";
    pgm::write(pgm_path.string(), Grid<std::uint8_t>({8, 8}, 100));
    const auto out_path = work_dir() / "flat_sp.svxb";
    const CmdResult r = run_cli("slic --input " + pgm_path.string() +
                                " --count 4 --compactness 10 --iters 10 --output " +
                                out_path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("M = 4") != std::string::npos);
    const SuperpixelMap sp = vox::to_superpixel_map(vox::read(out_path.string()), "sp");
    CHECK(sp.num_blocks == 4);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x)
            CHECK(sp.block_ids[y * 8 + x] == static_cast<std::int32_t>((y / 4) * 2 + x / 4));
}

TEST_CASE("cli slic validates parameters and inputs") {
    const auto pgm_path = work_dir() / "flat2.pgm";
    pgm::write(pgm_path.string(), Grid<std::uint8_t>({4, 4}, 10));
    SUBCASE("count 0 names the flag") {
        const CmdResult r = run_cli("slic --input " + pgm_path.string() +
                                    " --count 0 --output /tmp/x.svxb");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("--count") != std::string::npos);
    }
    SUBCASE("missing file names the path") {
        const CmdResult r =
            run_cli("slic --input /no/such/file.pgm --count 2 --output /tmp/x.svxb");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("/no/such/file.pgm") != std::string::npos);
    }
}

TEST_CASE("cli soften reproduces the 1x6 toy softening") {
    const auto gt = write_toy_gt();
    const auto sp = write_single_block_sp();
    const auto out_path = work_dir() / "toy_soft.svxb";
    const CmdResult r =
        run_cli("soften --gt " + gt.string() + " --superpixels " + sp.string() +
                " --classes 2 --normalize false --method sp --output " + out_path.string());
    REQUIRE(r.exit_code == 0);
    const SoftLabelStack soft = vox::to_soft_stack(vox::read(out_path.string()), "soft");
    REQUIRE(soft.planes.size() == 2);
    const std::vector<double> want{1.0 / 6.0, 0.25, 0.5, 0.75, 0.5, 0.25};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(soft.planes[1][i] ==
              doctest::Approx(static_cast<double>(static_cast<float>(want[i]))).epsilon(1e-6));
}

TEST_CASE("cli soften with normalization emits pointwise distributions") {
    const auto gt = write_toy_gt();
    const auto sp = write_single_block_sp();
    const auto out_path = work_dir() / "toy_soft_norm.svxb";
    const CmdResult r =
        run_cli("soften --gt " + gt.string() + " --superpixels " + sp.string() +
                " --classes 2 --normalize true --output " + out_path.string());
    REQUIRE(r.exit_code == 0);
    const SoftLabelStack soft = vox::to_soft_stack(vox::read(out_path.string()), "soft");
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(soft.planes[0][i] + soft.planes[1][i] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cli soften gaussian method matches the library") {
    const auto gt = write_toy_gt();
    const auto out_path = work_dir() / "toy_gauss.svxb";
    const CmdResult r = run_cli("soften --gt " + gt.string() +
                                " --classes 2 --method gaussian --sigma 1.0 --output " +
                                out_path.string());
    REQUIRE(r.exit_code == 0);
    const SoftLabelStack got = vox::to_soft_stack(vox::read(out_path.string()), "soft");
    LabelMap map;
    map.num_classes = 2;
    map.labels = Grid<std::int32_t>({1, 6}, 0);
    map.labels[2] = map.labels[3] = map.labels[4] = 1;
    const SoftLabelStack want = gaussian_soften(one_hot_encode(map), 1.0);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(got.planes[c][i] == static_cast<double>(static_cast<float>(want.planes[c][i])));
}

TEST_CASE("cli soften rejects inconsistent inputs with exit 3") {
    const auto gt = write_toy_gt();
    SUBCASE("superpixel dims mismatch") {
        SuperpixelMap sp;
        sp.block_ids = Grid<std::int32_t>({1, 7}, 0);
        sp.num_blocks = 1;
        const auto sp_path = work_dir() / "bad_sp.svxb";
        vox::write(sp_path.string(), vox::from_superpixel_map(sp));
        const CmdResult r = run_cli("soften --gt " + gt.string() + " --superpixels " +
                                    sp_path.string() + " --classes 2 --output /tmp/x.svxb");
        CHECK(r.exit_code == 3);
    }
    SUBCASE("label values above the class count") {
        const CmdResult r = run_cli("soften --gt " + gt.string() +
                                    " --classes 2 --method gaussian --output /tmp/x.svxb");
        CHECK(r.exit_code == 0);  // labels 0/1 fit 2 classes
        LabelMap map;
        map.num_classes = 5;
        map.labels = Grid<std::int32_t>({1, 6}, 0);
        map.labels[3] = 4;
        const auto gt5 = work_dir() / "gt5.svxb";
        vox::write(gt5.string(), vox::from_label_map(map));
        const CmdResult bad = run_cli("soften --gt " + gt5.string() +
                                      " --classes 2 --method gaussian --output /tmp/x.svxb");
        CHECK(bad.exit_code == 3);
    }
}

TEST_CASE("cli metrics on identical maps emits ones and zeros") {
    const auto gt = write_toy_gt();
    const auto csv_path = work_dir() / "metrics_eq.csv";
    const CmdResult r = run_cli("metrics --pred " + gt.string() + " --gt " + gt.string() +
                                " --classes 2 --csv-out " + csv_path.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(csv_path);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "class,dice,vs,hd95,asd,assd");
    std::string row0;
    std::getline(lines, row0);
    CHECK(row0 == "0,1.000000,1.000000,0.000000,0.000000,0.000000");
}

TEST_CASE("cli metrics reproduces the shifted-square toy case") {
    LabelMap gt, pred;
    gt.num_classes = pred.num_classes = 2;
    gt.labels = Grid<std::int32_t>({4, 4}, 0);
    pred.labels = Grid<std::int32_t>({4, 4}, 0);
    for (std::size_t y = 1; y <= 2; ++y)
        for (std::size_t x = 0; x <= 1; ++x) {
            gt.labels[y * 4 + x] = 1;
            pred.labels[y * 4 + x + 1] = 1;
        }
    const auto gt_path = work_dir() / "sq_gt.svxb";
    const auto pred_path = work_dir() / "sq_pred.svxb";
    vox::write(gt_path.string(), vox::from_label_map(gt));
    vox::write(pred_path.string(), vox::from_label_map(pred));
    const auto csv_path = work_dir() / "metrics_sq.csv";
    const CmdResult r = run_cli("metrics --pred " + pred_path.string() + " --gt " +
                                gt_path.string() + " --classes 2 --csv-out " + csv_path.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(csv_path);
    CHECK(csv.find("1,0.500000,1.000000,") != std::string::npos);
}

TEST_CASE("cli metrics rejects dimension mismatches with exit 3") {
    const auto gt = write_toy_gt();
    LabelMap other;
    other.num_classes = 2;
    other.labels = Grid<std::int32_t>({2, 3}, 0);
    other.labels[1] = 1;
    const auto other_path = work_dir() / "other.svxb";
    vox::write(other_path.string(), vox::from_label_map(other));
    const CmdResult r = run_cli("metrics --pred " + other_path.string() + " --gt " + gt.string() +
                                " --classes 2 --csv-out /tmp/x.csv");
    CHECK(r.exit_code == 3);
}

TEST_CASE("cli toy run emits deterministic CSVs and honors beta 0") {
    const auto cfg_path = work_dir() / "toy.cfg";
    {
        std::ofstream out(cfg_path);
        out << "# tiny config\n"
            << "num_train = 2\n"
            << "num_eval = 1\n"
            << "image_size = 24\n"
            << "superpixel_count = 9\n"
            << "epochs = 15\n"
            << "beta = 4\n";  // the --beta flag must override this
    }
    const auto out_a = work_dir() / "run_a";
    const auto out_b = work_dir() / "run_b";
    const std::string base = "toy run --config " + cfg_path.string() + " --seeds 2 ";
    CHECK(run_cli(base + "--beta 0 --mode superpixel --out " + out_a.string()).exit_code == 0);
    CHECK(run_cli(base + "--beta 0 --mode superpixel --out " + out_a.string()).exit_code == 0);
    const std::string raw_a = slurp(out_a.string() + ".raw.csv");
    CHECK(!raw_a.empty());
    // byte-identical on re-run
    CHECK(run_cli(base + "--beta 0 --mode superpixel --out " + out_b.string()).exit_code == 0);
    CHECK(raw_a == slurp(out_b.string() + ".raw.csv"));
    // beta = 0 equals the hard baseline, metric for metric
    const auto out_hard = work_dir() / "run_hard";
    CHECK(run_cli(base + "--mode hard --beta 0 --out " + out_hard.string()).exit_code == 0);
    const std::string raw_hard = slurp(out_hard.string() + ".raw.csv");
    CHECK(raw_a == raw_hard);
}

TEST_CASE("cli toy sweep-beta produces a row per value and seed") {
    const auto cfg_path = work_dir() / "toy2.cfg";
    {
        std::ofstream out(cfg_path);
        out << "num_train = 1\nnum_eval = 1\nimage_size = 24\nsuperpixel_count = 9\n"
            << "epochs = 10\n";
    }
    const auto out_prefix = work_dir() / "sweep";
    const CmdResult r = run_cli("toy sweep-beta --config " + cfg_path.string() +
                                " --seeds 2 --betas 0.25,1 --out " + out_prefix.string());
    REQUIRE(r.exit_code == 0);
    const std::string raw = slurp(out_prefix.string() + ".raw.csv");
    std::size_t lines = 0;
    for (char ch : raw) lines += ch == '\n';
    CHECK(lines == 1 + 2 * 2);  // header + |betas| * |seeds|
    const std::string summary = slurp(out_prefix.string() + ".summary.csv");
    CHECK(summary.find("\n0.25,2,") != std::string::npos);
    CHECK(summary.find("\n1,2,") != std::string::npos);
}

TEST_CASE("cli toy sweep-superpixels dispatches with custom counts") {
    const auto cfg_path = work_dir() / "toy3.cfg";
    {
        std::ofstream out(cfg_path);
        out << "num_train = 1\nnum_eval = 1\nimage_size = 24\nepochs = 10\n";
    }
    const auto out_prefix = work_dir() / "spsweep";
    const CmdResult r = run_cli("toy sweep-superpixels --config " + cfg_path.string() +
                                " --seeds 1 --counts 9,16 --out " + out_prefix.string());
    REQUIRE(r.exit_code == 0);
    const std::string raw = slurp(out_prefix.string() + ".raw.csv");
    CHECK(raw.find("\n9,0,") != std::string::npos);
    CHECK(raw.find("\n16,0,") != std::string::npos);
}

TEST_CASE("cli toy rejects unknown config keys with the line number") {
    const auto cfg_path = work_dir() / "bad.cfg";
    {
        std::ofstream out(cfg_path);
        out << "epochs = 5\nnot_a_key = 1\n";
    }
    const CmdResult r =
        run_cli("toy run --config " + cfg_path.string() + " --seeds 1 --out /tmp/x");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(r.err.find("not_a_key") != std::string::npos);
}

TEST_CASE("cli usage errors exit with 2") {
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("slic").exit_code == 2);  // missing required flags
}

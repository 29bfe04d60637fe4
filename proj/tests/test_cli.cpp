#include <catch2/catch.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vgf/image.hpp"

// Drives the installed command-line binary end to end.

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(VGF_CLI_PATH) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    os << text;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const char* kTinyDigitsTrain =
    "data.kind = digits\n"
    "data.n = 64\n"
    "train.epochs = 1\n"
    "train.batch = 32\n"
    "train.seed = 5\n"
    "model.K = 8\n"
    "model.dphi = 16\n"
    "model.conv1 = 4\n"
    "model.conv2 = 8\n"
    "model.hidden = 32\n"
    "gen.dz = 8\n"
    "vcd.d = 12\n";

}  // namespace

TEST_CASE("grad-check passes and exits zero", "[cli]") {
    REQUIRE(run("grad-check") == 0);
    std::string out = slurp("cli_stdout.txt");
    REQUIRE(out.find("max relative error") != std::string::npos);
}

TEST_CASE("training writes checkpoints, logs and a resolved config", "[cli]") {
    write_file("cli_vgan.cfg", kTinyDigitsTrain);
    REQUIRE(run("train-vgan --config cli_vgan.cfg --out cli_vgan_out") == 0);
    REQUIRE(!slurp("cli_vgan_out/energy.vgf").empty());
    REQUIRE(!slurp("cli_vgan_out/generator.vgf").empty());
    REQUIRE(!slurp("cli_vgan_out/train_log.csv").empty());
    REQUIRE(!slurp("cli_vgan_out/timing.csv").empty());

    // the snapshot holds materialized defaults, so a rerun needs nothing else
    std::string resolved = slurp("cli_vgan_out/config.resolved");
    REQUIRE(resolved.find("opt.lr = ") != std::string::npos);
    REQUIRE(resolved.find("model.head_scale = ") != std::string::npos);
}

TEST_CASE("reruns are bit-identical; a seed override changes outputs", "[cli]") {
    write_file("cli_det.cfg", kTinyDigitsTrain);
    REQUIRE(run("train-vgan --config cli_det.cfg --out cli_det_a") == 0);
    REQUIRE(run("train-vgan --config cli_det.cfg --out cli_det_b") == 0);
    REQUIRE(slurp("cli_det_a/energy.vgf") == slurp("cli_det_b/energy.vgf"));
    REQUIRE(slurp("cli_det_a/generator.vgf") == slurp("cli_det_b/generator.vgf"));
    REQUIRE(slurp("cli_det_a/train_log.csv") == slurp("cli_det_b/train_log.csv"));

    REQUIRE(run("train-vgan --config cli_det.cfg --out cli_det_c --seed 99") == 0);
    REQUIRE(slurp("cli_det_a/energy.vgf") != slurp("cli_det_c/energy.vgf"));
}

TEST_CASE("sample produces a grid with exact dimensions", "[cli]") {
    write_file("cli_sample.cfg", std::string(kTinyDigitsTrain) + "sample.checkpoint = cli_vgan_out/generator.vgf\n");
    REQUIRE(run("train-vgan --config cli_sample.cfg --out cli_vgan_out") == 0);
    REQUIRE(run("sample --config cli_sample.cfg --out cli_sample_out") == 0);
    vgf::PngInfo info = vgf::read_png_info("cli_sample_out/samples.png");
    REQUIRE(info.width == 10 * 28);
    REQUIRE(info.height == 10 * 28);
    REQUIRE(info.bit_depth == 8);
}

TEST_CASE("chain mirrors the figure layout: start row plus one row per step", "[cli]") {
    write_file("cli_vcd.cfg", kTinyDigitsTrain);
    REQUIRE(run("train-vcd --config cli_vcd.cfg --out cli_vcd_out") == 0);
    write_file("cli_chain.cfg",
               std::string(kTinyDigitsTrain) + "chain.checkpoint = cli_vcd_out/transition.vgf\nchain.count = 6\n");
    REQUIRE(run("chain --config cli_chain.cfg --out cli_chain_out --steps 9") == 0);
    vgf::PngInfo info = vgf::read_png_info("cli_chain_out/chain.png");
    REQUIRE(info.width == 6 * 28);
    REQUIRE(info.height == (9 + 1) * 28);
}

TEST_CASE("eval-bound writes its report row", "[cli]") {
    write_file("cli_bound.cfg",
               "data.kind = ring\ndata.n = 100\ndata.modes = 1\ndata.sigma = 0.3\n"
               "bound.dims = 2\nbound.lo = -4\nbound.hi = 4\nbound.points = 64\nbound.samples = 2000\n");
    REQUIRE(run("eval-bound --config cli_bound.cfg --out cli_bound_out") == 0);
    std::string csv = slurp("cli_bound_out/bound_report.csv");
    REQUIRE(csv.find("data_term,q_term,entropy,bound,exact_nll,gap") != std::string::npos);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("exit codes distinguish config, runtime and io failures", "[cli]") {
    write_file("cli_typo.cfg", std::string(kTinyDigitsTrain) + "tran.k = 2\n");  // misspelled key
    REQUIRE(run("train-vgan --config cli_typo.cfg --out cli_typo_out") == 2);
    std::string err = slurp("cli_stderr.txt");
    REQUIRE(err.find("tran.k") != std::string::npos);

    write_file("cli_missing.cfg", std::string(kTinyDigitsTrain) + "sample.checkpoint = does_not_exist.vgf\n");
    REQUIRE(run("sample --config cli_missing.cfg --out cli_missing_out") == 4);

    // an energy checkpoint is not a generator checkpoint: runtime failure
    write_file("cli_wrong.cfg", std::string(kTinyDigitsTrain) + "sample.checkpoint = cli_vgan_out/energy.vgf\n");
    REQUIRE(run("sample --config cli_wrong.cfg --out cli_wrong_out") == 3);

    REQUIRE(run("eval-bound --config no_such_file.cfg --out cli_nope") == 2);
}

TEST_CASE("augment-train reports a results table", "[cli]") {
    write_file("cli_aug.cfg",
               "data.kind = digits\ndata.n = 220\ndata.val_count = 60\ndata.test_n = 100\n"
               "semisup.labeled = 120\nsemisup.epochs = 2\nsemisup.batch = 20\n"
               "semisup.conv1 = 4\nsemisup.conv2 = 8\nsemisup.fc = 32\n");
    REQUIRE(run("augment-train --config cli_aug.cfg --out cli_aug_out") == 0);
    std::string csv = slurp("cli_aug_out/results.csv");
    REQUIRE(csv.find("model,dataset,error") != std::string::npos);
    REQUIRE(csv.find("no-augmentation") != std::string::npos);
}

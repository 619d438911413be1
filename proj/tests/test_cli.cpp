#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "plangan/cli.hpp"
#include "plangan/config.hpp"
#include "plangan/errors.hpp"
#include "plangan/synth.hpp"

using namespace plangan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const char* name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("parse recognizes the documented command lines") {
    auto c1 = cli::parse({"synth-data", "--count", "100", "--seed", "7", "--out", "data.jsonl"});
    CHECK(c1.verb == "synth-data");
    CHECK(c1.count == 100);
    CHECK(c1.seed == 7);
    CHECK(c1.out == std::string("data.jsonl"));

    auto c2 = cli::parse({"train", "--data", "d.jsonl", "--bucket", "10-12", "--config",
                          "cfg.json"});
    CHECK(c2.verb == "train");
    CHECK(c2.bucket == std::string("10-12"));
    CHECK(c2.config_path == std::string("cfg.json"));

    CHECK_THROWS_AS(cli::parse({"--bogus"}), UsageError);
    CHECK_THROWS_AS(cli::parse({"synth-data", "--count", "3", "--bogus"}), UsageError);
    CHECK_THROWS_AS(cli::parse({"train"}), UsageError);          // missing --data
    CHECK_THROWS_AS(cli::parse({"train", "--data", "x", "--bucket", "2-5"}), UsageError);
    CHECK_THROWS_AS(cli::parse({}), UsageError);                 // no verb
}

TEST_CASE("usage errors exit with status 2") {
    const char* argv1[] = {"plangan", "--bogus"};
    CHECK(cli::main(2, argv1) == 2);
    const char* argv2[] = {"plangan", "train"};
    CHECK(cli::main(2, argv2) == 2);
}

TEST_CASE("synth-data writes the dataset and a resolved config snapshot") {
    fs::path dir = fresh_dir("plangan_cli_synth");
    fs::path out = dir / "data.jsonl";
    cli::Command cmd = cli::parse({"synth-data", "--count", "12", "--seed", "5", "--out",
                                   out.string(), "--max-rooms", "6"});
    CHECK(cli::run(cmd) == 0);
    auto samples = read_dataset(out.string());
    CHECK(samples.size() == 12);
    for (const auto& s : samples) CHECK(s.diagram.num_rooms() <= 6);

    std::ifstream snap(dir / "config.resolved.json");
    REQUIRE(snap.good());
    json j;
    snap >> j;
    CHECK(j["seed"] == 5);
    CHECK(j["synth"]["max_rooms"] == 6);
    // paper-default hyperparameters surface in the snapshot
    CHECK(j["train"]["lambda1"] == 1.0);
    CHECK(j["train"]["lambda2"] == 0.1);
    CHECK(j["train"]["batch_size"] == 32);
    CHECK(j["train"]["lr_g"] == 1e-4);
    CHECK(j["pretrain"]["mask_ratio"] == 0.4);
    CHECK(j["pretrain"]["encoder_blocks"] == 8);
    CHECK(j["pretrain"]["decoder_blocks"] == 2);
    CHECK(j["generator"]["gte_blocks"] == 8);
    fs::remove_all(dir);
}

TEST_CASE("config file overrides defaults, flags override the file") {
    fs::path dir = fresh_dir("plangan_cli_cfg");
    {
        std::ofstream f(dir / "cfg.json");
        f << R"({"seed": 11, "synth": {"max_rooms": 4}})";
    }
    fs::path out = dir / "data.jsonl";
    cli::Command cmd = cli::parse({"synth-data", "--count", "3", "--config",
                                   (dir / "cfg.json").string(), "--seed", "99", "--out",
                                   out.string()});
    CHECK(cli::run(cmd) == 0);
    std::ifstream snap(dir / "config.resolved.json");
    json j;
    snap >> j;
    CHECK(j["seed"] == 99);               // flag beats file
    CHECK(j["synth"]["max_rooms"] == 4);  // file beats default
    fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected") {
    CHECK_THROWS_AS(run_config_from_json(R"({"bogus": 1})"), Error);
    CHECK_THROWS_AS(run_config_from_json(R"({"train": {"bogus": 1}})"), Error);
}

TEST_CASE("evaluate without a checkpoint self-compares to fid zero") {
    fs::path dir = fresh_dir("plangan_cli_eval");
    fs::path data = dir / "data.jsonl";
    {
        cli::Command synth = cli::parse({"synth-data", "--count", "8", "--seed", "3", "--out",
                                         data.string(), "--max-rooms", "5"});
        REQUIRE(cli::run(synth) == 0);
    }
    fs::path out = dir / "eval";
    cli::Command cmd =
        cli::parse({"evaluate", "--data", data.string(), "--out", out.string()});
    CHECK(cli::run(cmd) == 0);

    std::ifstream rep(out / "report.json");
    REQUIRE(rep.good());
    json j;
    rep >> j;
    CHECK(j["fid"].get<double>() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(j["compatibility_mean"].get<double>() == 0.0);
    CHECK(fs::exists(out / "extractor.bin"));
    fs::remove_all(dir);
}

TEST_CASE("runtime failures exit 1 with a machine-readable record") {
    fs::path dir = fresh_dir("plangan_cli_fail");
    std::string data = (dir / "missing.jsonl").string();
    std::string out = (dir / "o").string();
    const char* argv[] = {"plangan", "evaluate", "--data", data.c_str(), "--out", out.c_str()};
    CHECK(cli::main(6, argv) == 1);
    fs::remove_all(dir);
}

TEST_CASE("ablation preset list covers the required matrix") {
    const auto& names = cli::ablation_preset_names();
    for (const char* want : {"eq3", "eq4", "no-cna", "no-nna", "no-gmb", "mask-node-only",
                             "mask-edge-only", "mask-both"}) {
        bool found = false;
        for (const auto& n : names) found = found || n == want;
        CHECK_MESSAGE(found, want);
    }
    CHECK_THROWS_AS(cli::run(cli::parse({"ablate", "--data", "x.jsonl", "--out", "o",
                                         "--only", "nonsense"})),
                    Error);
}

#include <filesystem>
#include <fstream>

#include <catch_amalgamated.hpp>

#include "reachgen/app.hpp"

using namespace reachgen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_small_config(const fs::path& dir) {
  nlohmann::json j = {
      {"gen", {{"n_train", 6}, {"n_test", 3}, {"seed", 42}}},
  };
  fs::path p = dir / "config.json";
  atomic_write(p, j.dump(2) + "\n");
  return p;
}

AppOptions gen_opts(const fs::path& cfg, const fs::path& out) {
  AppOptions o;
  o.command = "gen-data";
  o.config_path = cfg;
  o.out_dir = out;
  return o;
}

}  // namespace

TEST_CASE("gen-data writes the dataset and run manifest") {
  TempDir tmp("reachgen_cli_gen");
  fs::path cfg = write_small_config(tmp.path);
  fs::path out = tmp.path / "runs";

  int rc = run_command(gen_opts(cfg, out));
  REQUIRE(rc == 0);
  CHECK(fs::exists(out / "id" / "dataset" / "pairs.csv"));
  CHECK(fs::exists(out / "id" / "dataset" / "activations.csv"));
  CHECK(fs::exists(out / "id" / "dataset" / "manifest.json"));
  CHECK(fs::exists(out / "id" / "run_manifest_gen-data.json"));

  Dataset ds = load_dataset(out / "id" / "dataset");
  CHECK(ds.samples.size() == 9);
  CHECK(ds.gen.seed == 42);

  SECTION("run manifest records output checksums") {
    auto m = nlohmann::json::parse(
        read_file(out / "id" / "run_manifest_gen-data.json"));
    CHECK(m["command"] == "gen-data");
    CHECK(m["output_checksums"]["dataset/pairs.csv"] ==
          file_checksum(out / "id" / "dataset" / "pairs.csv"));
    CHECK(m["timing_seconds"].get<double>() >= 0.0);
  }
}

TEST_CASE("repeated gen-data runs are byte-identical") {
  TempDir tmp("reachgen_cli_det");
  fs::path cfg = write_small_config(tmp.path);
  REQUIRE(run_command(gen_opts(cfg, tmp.path / "a")) == 0);
  AppOptions o = gen_opts(cfg, tmp.path / "b");
  o.threads = 3;
  REQUIRE(run_command(o) == 0);
  for (const char* f : {"pairs.csv", "activations.csv", "manifest.json"})
    CHECK(read_file(tmp.path / "a" / "id" / "dataset" / f) ==
          read_file(tmp.path / "b" / "id" / "dataset" / f));
}

TEST_CASE("--method oc routes output to the oc directory") {
  TempDir tmp("reachgen_cli_oc");
  nlohmann::json j = {{"gen", {{"n_train", 1}, {"n_test", 1}, {"seed", 3}}}};
  fs::path cfg = tmp.path / "config.json";
  atomic_write(cfg, j.dump() + "\n");
  AppOptions o = gen_opts(cfg, tmp.path / "runs");
  o.method = Method::OC;
  REQUIRE(run_command(o) == 0);
  CHECK(fs::exists(tmp.path / "runs" / "oc" / "dataset" / "pairs.csv"));
  CHECK(!fs::exists(tmp.path / "runs" / "id"));
}

TEST_CASE("--seed overrides the config seed") {
  TempDir tmp("reachgen_cli_seed");
  fs::path cfg = write_small_config(tmp.path);
  AppOptions o = gen_opts(cfg, tmp.path / "runs");
  o.seed = 777;
  REQUIRE(run_command(o) == 0);
  Dataset ds = load_dataset(tmp.path / "runs" / "id" / "dataset");
  CHECK(ds.gen.seed == 777);
}

TEST_CASE("missing or malformed config exits with code 2") {
  TempDir tmp("reachgen_cli_bad");
  AppOptions o = gen_opts(tmp.path / "nope.json", tmp.path / "runs");
  CHECK(run_command(o) == 2);

  atomic_write(tmp.path / "broken.json", "{ not json");
  o.config_path = tmp.path / "broken.json";
  CHECK(run_command(o) == 2);
}

TEST_CASE("invalid config values exit with code 2 before any work") {
  TempDir tmp("reachgen_cli_invalid");
  nlohmann::json j = {{"arm", {{"l1", -0.3}}}};
  fs::path cfg = tmp.path / "config.json";
  atomic_write(cfg, j.dump() + "\n");
  AppOptions o = gen_opts(cfg, tmp.path / "runs");
  CHECK(run_command(o) == 2);
  CHECK(!fs::exists(tmp.path / "runs" / "id" / "dataset"));
}

TEST_CASE("validate-config reports warnings and errors") {
  SECTION("defaults are valid") {
    AppOptions o;
    o.command = "validate-config";
    CHECK(run_command(o) == 0);
  }

  SECTION("off-reference region is a warning, not an error") {
    AppConfig cfg;
    cfg.gen.region = {-0.25, 0.25, 0.25, 0.50};  // 0.50 x 0.25
    auto diags = validate_config(cfg);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].level == Diagnostic::Level::Warning);
    CHECK(diags[0].message.find("region") != std::string::npos);
  }

  SECTION("negative link length is an error") {
    AppConfig cfg;
    cfg.arm.l1 = -0.3;
    auto diags = validate_config(cfg);
    bool has_error = false;
    for (const auto& d : diags)
      has_error |= d.level == Diagnostic::Level::Error;
    CHECK(has_error);
  }

  SECTION("horizon/dt mismatch is an error via the file entry point") {
    TempDir tmp("reachgen_cli_vc");
    nlohmann::json j = {{"ilqg", {{"horizon", 40}}}};
    atomic_write(tmp.path / "c.json", j.dump() + "\n");
    auto diags = validate_config_file(tmp.path / "c.json");
    bool found = false;
    for (const auto& d : diags)
      found |= d.level == Diagnostic::Level::Error &&
               d.message.find("horizon") != std::string::npos;
    CHECK(found);

    AppOptions o;
    o.command = "validate-config";
    o.config_path = tmp.path / "c.json";
    CHECK(run_command(o) == 2);
  }
}

TEST_CASE("failed stage rolls back its outputs") {
  TempDir tmp("reachgen_cli_rollback");
  fs::path cfg = write_small_config(tmp.path);
  AppOptions o;
  o.command = "pretrain";  // no dataset generated yet
  o.config_path = cfg;
  o.out_dir = tmp.path / "runs";
  CHECK(run_command(o) == 1);
  CHECK(!fs::exists(tmp.path / "runs" / "id" / "autoencoder.rgnn"));
}

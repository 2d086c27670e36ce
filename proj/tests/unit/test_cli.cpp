#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "gaborikl/cli.hpp"
#include "gaborikl/imaging.hpp"
#include "gaborikl/serialize.hpp"
#include "support.hpp"

using namespace gaborikl;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gaborikl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& p) {
  std::istringstream in(testing::read_text(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help lists flags with their defaults") {
  const auto fit = run_cli({"fit", "--help"});
  CHECK(fit.code == 0);
  for (const char* flag : {"--epsilon", "--C", "--kkt-tol", "--svr-max-iter", "--stab-l0",
                           "--grid-nu-steps", "--grid-theta-steps", "--refine-iters",
                           "--violation-tol", "--max-outer-iters", "--weight-prune-tol",
                           "--max-master-iters", "--max-points", "--sample-seed", "--image"}) {
    CHECK_MESSAGE(fit.out.find(flag) != std::string::npos, flag);
  }
  for (const char* value : {"0.05", "2500", "45", "32", "1e-06", "0.0001"}) {
    CHECK_MESSAGE(fit.out.find(value) != std::string::npos, value);
  }
  const auto sp = run_cli({"sparsify", "--help"});
  CHECK(sp.out.find("--lambda") != std::string::npos);
  CHECK(sp.out.find("0.1") != std::string::npos);
  const auto bank = run_cli({"bank", "--help"});
  CHECK(bank.out.find("40") != std::string::npos);
  CHECK(bank.out.find("--unweighted") != std::string::npos);
  const auto rep = run_cli({"reproduce-synthetic", "--help"});
  CHECK(rep.out.find("--seeds") != std::string::npos);
  CHECK(rep.out.find("--nu-max") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run_cli({}).code == cli::kExitError);
  CHECK(run_cli({"nonsense"}).code == cli::kExitError);
  CHECK(run_cli({"fit"}).code == cli::kExitError);
  CHECK(run_cli({"sparsify", "--model", "m.json", "--lambda", "-1"}).code == cli::kExitError);
}

TEST_CASE("missing input names the path") {
  testing::TempDir dir("cli_missing");
  const auto path = (dir / "nope.pgm").string();
  const auto r = run_cli({"fit", "--image", path, "--out", (dir / "o").string()});
  CHECK(r.code == cli::kExitError);
  CHECK(r.err.find(path) != std::string::npos);
}

TEST_CASE("constant image fits exactly") {
  testing::TempDir dir("cli_flat");
  save_pgm(dir / "flat.pgm", ImageRegion{8, 8, std::vector<double>(64, 100.0 / 255)});
  const auto r = run_cli({"fit", "--image", (dir / "flat.pgm").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("rmse 0\n") != std::string::npos);
  CHECK(r.out.find("components 0") != std::string::npos);
  const auto m = load_model(dir.path() / "o" / "model.json");
  CHECK(m.mixture.components.empty());

  const auto p = run_cli({"profile", "--model", (dir.path() / "o" / "model.json").string(), "--out",
                          (dir / "p.csv").string(), "--steps", "5"});
  CHECK(p.code == cli::kExitOk);
  const auto rows = read_csv(dir / "p.csv");
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) CHECK(row[1] == 0.0);
}

TEST_CASE("single synthetic Gabor fits within twice the tube") {
  testing::TempDir dir("cli_single");
  const auto img = (dir / "g.pgm").string();
  const auto s = run_cli({"synth", "--seed", "4", "--count", "1", "--width", "20", "--height", "20",
                          "--nu-min", "2", "--nu-max", "5", "--out", img});
  REQUIRE(s.code == cli::kExitOk);
  CHECK(std::filesystem::exists(dir / "g.json"));
  const auto r = run_cli({"fit", "--image", img, "--out", (dir / "fit").string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto report = read_json(dir.path() / "fit" / "report.json");
  CHECK(report.at("rmse").get<double>() <= 2 * 0.05);
  CHECK(report.at("certificate").at("certified").get<bool>());

  const auto model = (dir.path() / "fit" / "model.json").string();
  const auto p = run_cli({"profile", "--model", model, "--out", (dir / "p.csv").string(),
                          "--angular-out", (dir / "a.csv").string()});
  REQUIRE(p.code == cli::kExitOk);
  const auto m = load_model(model);
  const auto rows = read_csv(dir / "p.csv");
  REQUIRE(rows.size() == 161);
  CHECK(rows[0][0] == 0.0);
  CHECK(std::fabs(rows[0][1] - m.mixture.total_weight()) <= 1e-10);
  for (const auto& row : rows) CHECK(std::fabs(row[1]) <= rows[0][1]);
  CHECK(read_csv(dir / "a.csv").size() == 161);

  const auto sp = run_cli({"sparsify", "--model", model, "--lambda", "0.01", "--out",
                           (dir / "s.json").string(), "--overlay", (dir / "o.ppm").string(),
                           "--image", img, "--reconstruction", (dir / "s.pgm").string()});
  CHECK(sp.code == cli::kExitOk);
  CHECK(std::filesystem::exists(dir / "o.ppm"));
  CHECK(load_image(dir / "s.pgm").width == 20);

  // Same flags, same bytes.
  const auto again = run_cli({"synth", "--seed", "4", "--count", "1", "--width", "20", "--height",
                              "20", "--nu-min", "2", "--nu-max", "5", "--out", (dir / "g2.pgm").string()});
  REQUIRE(again.code == cli::kExitOk);
  CHECK(testing::read_text(dir / "g.pgm") == testing::read_text(dir / "g2.pgm"));
}

TEST_CASE("malformed model reports the parse location") {
  testing::TempDir dir("cli_badjson");
  testing::write_bytes(dir / "m.json", "{\n  \"mixture\": ,\n}");
  const auto r = run_cli({"profile", "--model", (dir / "m.json").string(), "--out", (dir / "p.csv").string()});
  CHECK(r.code == cli::kExitError);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("bank from a model directory") {
  testing::TempDir dir("cli_bank");
  for (int s = 1; s <= 2; ++s) {
    const auto img = (dir / ("g" + std::to_string(s) + ".pgm")).string();
    REQUIRE(run_cli({"synth", "--seed", std::to_string(s), "--width", "14", "--height", "14",
                     "--nu-min", "2", "--nu-max", "5", "--out", img}).code == 0);
    REQUIRE(run_cli({"fit", "--image", img, "--grid-nu-steps", "23", "--grid-theta-steps", "16",
                     "--out", (dir / ("f" + std::to_string(s))).string()}).code == 0);
    std::filesystem::create_directories(dir / "models");
    std::filesystem::copy_file(dir.path() / ("f" + std::to_string(s)) / "model.json",
                               dir.path() / "models" / ("m" + std::to_string(s) + ".json"));
  }
  const auto r = run_cli({"bank", "--models", (dir / "models").string(), "--k", "2", "--raster-size",
                          "7", "--out", (dir / "bank").string()});
  CHECK(r.code == cli::kExitOk);
  const auto bank = load_bank(dir.path() / "bank" / "bank.json");
  CHECK(bank.filters.size() <= 2);
  CHECK(std::filesystem::exists(dir.path() / "bank" / "filter_00.pgm"));
  CHECK(load_image(dir.path() / "bank" / "filter_00.pgm").width == 7);
}

TEST_CASE("reproduce with no seeds") {
  testing::TempDir dir("cli_rep0");
  const auto r = run_cli({"reproduce-synthetic", "--seeds", "0", "--out", (dir / "r").string()});
  CHECK(r.code == cli::kExitOk);
  const auto summary = testing::read_text(dir.path() / "r" / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 1);
}

TEST_CASE("reproduce one small seed") {
  testing::TempDir dir("cli_rep1");
  const auto r = run_cli({"reproduce-synthetic", "--seeds", "1", "--first-seed", "3", "--width", "16",
                          "--height", "16", "--nu-min", "2", "--nu-max", "5", "--grid-nu-steps", "23",
                          "--grid-theta-steps", "16", "--out", (dir / "r").string()});
  CHECK((r.code == cli::kExitOk || r.code == cli::kExitCapped));
  const auto rows = read_csv(dir.path() / "r" / "recovery.csv");
  CHECK(rows.size() == 2);
  const auto seed_dir = dir.path() / "r" / "seed_003";
  for (const char* f : {"image.pgm", "truth.json", "model.json", "sparse.json", "overlay.ppm",
                        "reconstruction.pgm", "sparse_reconstruction.pgm"}) {
    CHECK_MESSAGE(std::filesystem::exists(seed_dir / f), f);
  }
  const auto sp = load_sparse(seed_dir / "sparse.json");
  std::size_t nz = 0;
  for (auto n : sp.nonzeros) nz += n;
  CHECK(nz <= sp.kernels.size() * sp.support_size);
  CHECK(sp.sparsity_ratio <= 1.0);

  // The run directory mixes models with other JSON documents; only the model is clustered.
  const auto b = run_cli({"bank", "--models", (dir / "r").string(), "--k", "1", "--raster-size", "5",
                          "--out", (dir / "bank").string()});
  CHECK(b.code == cli::kExitOk);
  CHECK(b.out.find("models 1\n") != std::string::npos);
}

}

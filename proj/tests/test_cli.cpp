#include <doctest.h>

#include <filesystem>

#include "../tools/cli.hpp"
#include "polyfit/io.hpp"
#include "polyfit/regions.hpp"

#include <json.hpp>

using namespace polyfit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() : dir(fs::temp_directory_path() / "polyfit_cli_test") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"polyfit"};
  argv.insert(argv.end(), args.begin(), args.end());
  return polyfit::cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("fit on the unit box converges to a faithful model") {
  TempDir tmp;
  const std::string region = tmp.file("cube.json");
  atomic_write_file(region,
                    R"({"schema":1,"type":"hypercube","n":2,"lo":0,"hi":1})");
  const std::string model = tmp.file("model.json");
  const std::string hist = tmp.file("hist.csv");
  const int rc = run_cli({"fit", "--region", region.c_str(), "--m", "4",
                          "--seed", "7", "--out", model.c_str(), "--history",
                          hist.c_str(), "--lambda-schedule", "0.5:150"});
  CHECK(rc == cli::kExitOk);
  REQUIRE(file_exists(model));
  REQUIRE(file_exists(hist));
  REQUIRE(file_exists(tmp.file("hist.eval.csv")));

  const ModelDocument doc = parse_model_doc(read_file(model));
  CHECK(doc.polytope.facets() == 4);
  // the final eval row carries the converged weighted error
  const std::string ev = read_file(tmp.file("hist.eval.csv"));
  const auto last = ev.find_last_of('\n', ev.size() - 2);
  const std::string row = ev.substr(last + 1);
  std::stringstream ss(row);
  std::string iter, mf, mo;
  std::getline(ss, iter, ',');
  std::getline(ss, mf, ',');
  std::getline(ss, mo, ',');
  CHECK(0.5 * (std::stod(mf) + std::stod(mo)) < 1e-9);
}

TEST_CASE("missing region file exits 64 without partial outputs") {
  TempDir tmp;
  const std::string model = tmp.file("model.json");
  const int rc = run_cli({"fit", "--region", tmp.file("nope.json").c_str(),
                          "--m", "4", "--out", model.c_str()});
  CHECK(rc == cli::kExitUsage);
  CHECK(!file_exists(model));
}

TEST_CASE("eval of a model against itself as a lifted region reports zeros") {
  TempDir tmp;
  const std::string region = tmp.file("cube.json");
  atomic_write_file(region,
                    R"({"schema":1,"type":"hypercube","n":2,"lo":0,"hi":1})");
  const std::string model = tmp.file("model.json");
  REQUIRE(run_cli({"fit", "--region", region.c_str(), "--m", "4", "--seed",
                   "3", "--out", model.c_str(), "--lambda-schedule",
                   "0.5:100"}) == cli::kExitOk);

  // encode the trained polytope itself as a linear_lifted region, mapped
  // back to raw coordinates through the stored normalization
  const ModelDocument doc = parse_model_doc(read_file(model));
  const Polytope& P = doc.polytope;
  nlohmann::json lifted;
  lifted["schema"] = 1;
  lifted["type"] = "linear_lifted";
  std::vector<std::vector<double>> G;
  std::vector<double> h;
  for (int j = 0; j < P.facets(); ++j) {
    std::vector<double> row(P.dim());
    double shift = 0.0;
    for (int c = 0; c < P.dim(); ++c) {
      row[c] = P.A(j, c) / P.norm.scale[c];
      shift += P.A(j, c) * P.norm.offset[c] / P.norm.scale[c];
    }
    G.push_back(row);
    h.push_back(P.b[j] + shift);
  }
  lifted["G"] = G;
  lifted["h"] = h;
  lifted["x_dims"] = {0, 1};
  const std::string self_region = tmp.file("self.json");
  atomic_write_file(self_region, lifted.dump());

  const RegionPtr self = parse_region(read_file(self_region));
  const RegionPtr target = normalized_region(self, P.norm);
  const auto est = estimate_errors(P, *target, VectorXd(), 400, 5);
  CHECK(est.mean_feas < 1e-12);
  CHECK(est.mean_opt < 1e-12);
  CHECK(est.max_feas < 1e-12);
  CHECK(est.max_opt < 1e-12);
}

TEST_CASE("eval rejects theta outside the model box") {
  TempDir tmp;
  const std::string region = tmp.file("family.json");
  atomic_write_file(region, R"({"schema":1,"type":"ellipse2d",
    "a":{"base":1.0,"coeff":[0.3]},"b":0.5,
    "theta_box":{"lower":[-0.2],"upper":[0.2]}})");
  const std::string model = tmp.file("model.json");
  REQUIRE(run_cli({"fit", "--region", region.c_str(), "--mode",
                   "parameterized", "--m", "6", "--seed", "2", "--out",
                   model.c_str(), "--lambda-schedule", "0.5:60"}) ==
          cli::kExitOk);
  const ModelDocument doc = parse_model_doc(read_file(model));
  REQUIRE(doc.mlp.has_value());  // mode wiring produced a network block

  CHECK(run_cli({"eval", "--model", model.c_str(), "--region", region.c_str(),
                 "--theta", "0.9", "--dirs", "50"}) == cli::kExitUsage);
  CHECK(run_cli({"eval", "--model", model.c_str(), "--region", region.c_str(),
                 "--theta", "0.1", "--dirs", "50", "--seed", "4"}) ==
        cli::kExitOk);
}

TEST_CASE("unknown bench suite exits 64") {
  CHECK(run_cli({"bench", "moebius"}) == cli::kExitUsage);
}

TEST_SUITE_END();

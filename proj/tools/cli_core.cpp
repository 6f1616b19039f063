#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyfit/benchmarks.hpp"
#include "polyfit/io.hpp"
#include "polyfit/paramnet.hpp"

namespace polyfit::cli {

namespace {

using nlohmann::json;

std::vector<Phase> parse_schedule(const std::string& text) {
  std::vector<Phase> phases;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw UsageError("bad --lambda-schedule entry '" + item +
                       "' (expected lambda:iters)");
    Phase p;
    p.lambda = std::stod(item.substr(0, colon));
    p.iters = std::stoi(item.substr(colon + 1));
    phases.push_back(p);
  }
  if (phases.empty()) throw UsageError("--lambda-schedule is empty");
  return phases;
}

VectorXd parse_theta(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
  VectorXd v(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(std::stoi(item));
  if (dims.empty()) throw UsageError("--dims is empty");
  return dims;
}

std::string eval_csv_path(const std::string& history_path) {
  const auto dot = history_path.rfind('.');
  if (dot == std::string::npos) return history_path + ".eval";
  return history_path.substr(0, dot) + ".eval" + history_path.substr(dot);
}

struct FitOptions {
  std::string region_path;
  std::string config_path;
  std::string out_path;
  std::string history_path;
  std::string schedule;
  std::string mode = "fixed";
  int facets = 0;
  std::uint64_t seed = 1;
  bool seed_set = false;
  bool facets_set = false;
};

void apply_train_json(const json& j, TrainConfig& cfg) {
  if (j.contains("m")) cfg.facets = j.at("m").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
  if (j.contains("lr_decay")) cfg.lr_decay = j.at("lr_decay").get<double>();
  if (j.contains("lr_min")) cfg.lr_min = j.at("lr_min").get<double>();
  if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
  if (j.contains("adam_eps")) cfg.adam_eps = j.at("adam_eps").get<double>();
  if (j.contains("batch")) cfg.batch = j.at("batch").get<int>();
  if (j.contains("act_tol")) cfg.act_tol = j.at("act_tol").get<double>();
  if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<int>();
  if (j.contains("eval_every")) cfg.eval_every = j.at("eval_every").get<int>();
  if (j.contains("eval_dirs")) cfg.eval_dirs = j.at("eval_dirs").get<int>();
  if (j.contains("conv_tol")) cfg.conv_tol = j.at("conv_tol").get<double>();
  if (j.contains("patience")) cfg.patience = j.at("patience").get<int>();
  if (j.contains("reseed_after"))
    cfg.reseed_after = j.at("reseed_after").get<int>();
  if (j.contains("adam_reset_every"))
    cfg.adam_reset_every = j.at("adam_reset_every").get<int>();
  if (j.contains("snapshot_every"))
    cfg.snapshot_every = j.at("snapshot_every").get<int>();
  if (j.contains("phases")) {
    cfg.phases.clear();
    for (const auto& pj : j.at("phases")) {
      Phase p;
      p.lambda = pj.at("lambda").get<double>();
      p.iters = pj.at("iters").get<int>();
      if (pj.contains("lr")) p.lr = pj.at("lr").get<double>();
      cfg.phases.push_back(p);
    }
  }
}

int cmd_fit(const FitOptions& opt) {
  std::string region_path = opt.region_path;
  std::string out_path = opt.out_path;
  std::string history_path = opt.history_path;
  std::string mode = opt.mode;
  TrainConfig cfg;

  if (!opt.config_path.empty()) {
    const json doc = json::parse(read_file(opt.config_path));
    if (!doc.contains("schema") || doc.at("schema") != 1)
      throw UsageError("run config: missing or unsupported schema");
    if (doc.contains("mode")) mode = doc.at("mode").get<std::string>();
    if (doc.contains("region") && region_path.empty())
      region_path = doc.at("region").get<std::string>();
    if (doc.contains("out") && out_path.empty())
      out_path = doc.at("out").get<std::string>();
    if (doc.contains("history") && history_path.empty())
      history_path = doc.at("history").get<std::string>();
    if (doc.contains("train")) apply_train_json(doc.at("train"), cfg);
  }
  if (opt.facets_set) cfg.facets = opt.facets;
  if (opt.seed_set) cfg.seed = opt.seed;
  if (!opt.schedule.empty()) cfg.phases = parse_schedule(opt.schedule);

  if (region_path.empty()) throw UsageError("fit needs --region (or a config)");
  if (!file_exists(region_path))
    throw UsageError("region file does not exist: " + region_path);
  if (mode != "fixed" && mode != "parameterized")
    throw UsageError("mode must be 'fixed' or 'parameterized'");
  cfg.validate();

  const RegionPtr region = parse_region(read_file(region_path));

  ModelDocument model;
  TrainHistory history;
  if (mode == "parameterized") {
    if (region->theta_dim() == 0)
      throw UsageError("parameterized fit needs a region with a theta box");
    auto res = fit_parameterized(region, region->theta_box(), cfg);
    history = std::move(res.history);
    model.polytope = emit(res.net, forward(res.net, res.net.box.center()));
    model.mlp = std::move(res.net);
  } else {
    const VectorXd theta0 =
        region->theta_dim() > 0 ? region->theta_box().center() : VectorXd();
    auto res = fit(region, theta0, cfg);
    history = std::move(res.history);
    model.polytope = std::move(res.polytope);
  }

  if (!out_path.empty()) atomic_write_file(out_path, write_model_doc(model));
  if (!history_path.empty()) {
    atomic_write_file(history_path, history_csv(history));
    atomic_write_file(eval_csv_path(history_path), eval_csv(history));
  }

  if (history.status == TrainStatus::Aborted) {
    std::fprintf(stderr, "fit aborted after %d iterations: %s\n",
                 history.iterations_used, history.message.c_str());
    return kExitRuntime;
  }
  std::fprintf(stderr, "fit %s after %d iterations (final weighted error %s)\n",
               history.status == TrainStatus::Converged ? "converged"
                                                        : "completed schedule",
               history.iterations_used,
               format_g17(history.evals.back().weighted).c_str());
  return kExitOk;
}

struct EvalOptions {
  std::string model_path;
  std::string region_path;
  std::string theta;
  int dirs = 1000;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalOptions& opt) {
  if (!file_exists(opt.model_path))
    throw UsageError("model file does not exist: " + opt.model_path);
  if (!file_exists(opt.region_path))
    throw UsageError("region file does not exist: " + opt.region_path);
  const ModelDocument model = parse_model_doc(read_file(opt.model_path));
  const RegionPtr region = parse_region(read_file(opt.region_path));
  if (region->dim() != model.polytope.dim())
    throw UsageError("model and region dimensions differ");

  VectorXd theta;
  if (!opt.theta.empty()) theta = parse_theta(opt.theta);
  Polytope P = model.polytope;
  if (model.mlp) {
    if (theta.size() == 0) theta = model.mlp->box.center();
    if (!model.mlp->box.contains(theta))
      throw UsageError("theta lies outside the model's theta box");
    P = emit(*model.mlp, forward(*model.mlp, theta));
  }
  if (region->theta_dim() == 0) theta = VectorXd();

  const bool identity = (P.norm.scale.array() == 1.0).all() &&
                        (P.norm.offset.array() == 0.0).all();
  const RegionPtr target = identity ? region : normalized_region(region, P.norm);
  const ErrorEstimate est = estimate_errors(P, *target, theta, opt.dirs, opt.seed);

  std::printf(
      "{\"mean_feas\":%s,\"mean_opt\":%s,\"max_feas\":%s,\"max_opt\":%s,"
      "\"n_dirs\":%d,\"seed\":%llu}\n",
      format_g17(est.mean_feas).c_str(), format_g17(est.mean_opt).c_str(),
      format_g17(est.max_feas).c_str(), format_g17(est.max_opt).c_str(),
      est.n_dirs, static_cast<unsigned long long>(est.seed));
  return kExitOk;
}

struct BenchOptions {
  std::string suite;
  std::string out_path;
  std::string dims = "2,5,10";
  std::uint64_t seed = 1;
  bool strict = false;
};

int cmd_bench(const BenchOptions& opt) {
  TrainConfig base;
  base.seed = opt.seed;

  bool ok = true;
  std::vector<BenchReport> reports;
  if (opt.suite == "hypercube") {
    reports = run_hypercube_suite(parse_dims(opt.dims), base);
    for (const auto& r : reports) ok = ok && r.converged_error < 1e-5;
  } else if (opt.suite == "hypersphere") {
    reports = run_hypersphere_suite(parse_dims(opt.dims), base);
    for (const auto& r : reports)
      ok = ok && r.reduction >= 0.99 && r.converged_error >= 0.9 * *r.ideal_error;
  } else if (opt.suite == "shapes2d") {
    const auto res = run_2d_suite(base);
    reports = res.reports;
    if (!opt.out_path.empty()) {
      const std::filesystem::path dir =
          std::filesystem::path(opt.out_path).parent_path();
      for (const auto& [id, csv] : res.snapshots)
        atomic_write_file((dir / ("snapshots_" + id + ".csv")).string(), csv);
    }
    ok = reports[0].converged_error < 0.5 * reports[0].init_error &&
         res.hull_cover_violation < 1e-3 && res.hull_support_gap < 5e-3;
  } else if (opt.suite == "aggregation") {
    const auto res = run_aggregation_demo(20, 6, base);
    reports = {res.report};
    ok = res.max_feas < 1e-8 && res.feasible_samples == res.total_samples;
  } else {
    throw UsageError("unknown suite '" + opt.suite +
                     "' (expected hypercube, hypersphere, shapes2d, aggregation)");
  }

  if (!opt.out_path.empty())
    atomic_write_file(opt.out_path, bench_csv(reports));
  else
    std::fputs(bench_csv(reports).c_str(), stdout);

  if (opt.strict && !ok) {
    std::fprintf(stderr, "bench: strict thresholds violated\n");
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"polytope fitting of support/projection-oracle regions"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "fit a polytope to a region");
  fit_cmd->add_option("--region", fit_opt.region_path, "region document");
  fit_cmd->add_option("--config", fit_opt.config_path, "run config document");
  fit_cmd->add_option("--m", fit_opt.facets, "hyperplane count")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_opt.seed, "random seed");
  fit_cmd->add_option("--out", fit_opt.out_path, "model output path");
  fit_cmd->add_option("--history", fit_opt.history_path, "history CSV path");
  fit_cmd->add_option("--lambda-schedule", fit_opt.schedule,
                      "schedule as l:iters,l:iters,...");
  fit_cmd->add_option("--mode", fit_opt.mode, "fixed | parameterized");

  EvalOptions eval_opt;
  auto* eval_cmd = app.add_subcommand("eval", "estimate model errors");
  eval_cmd->add_option("--model", eval_opt.model_path, "model document")
      ->required();
  eval_cmd->add_option("--region", eval_opt.region_path, "region document")
      ->required();
  eval_cmd->add_option("--theta", eval_opt.theta, "comma-separated theta");
  eval_cmd->add_option("--dirs", eval_opt.dirs, "number of directions")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_opt.seed, "random seed");

  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
  bench_cmd->add_option("suite", bench_opt.suite, "suite name")->required();
  bench_cmd->add_option("--out", bench_opt.out_path, "report CSV path");
  bench_cmd->add_option("--dims", bench_opt.dims, "comma-separated dimensions");
  bench_cmd->add_option("--seed", bench_opt.seed, "random seed");
  bench_cmd->add_flag("--strict", bench_opt.strict,
                      "nonzero exit on threshold violations");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) {
      fit_opt.seed_set = fit_cmd->count("--seed") > 0;
      fit_opt.facets_set = fit_cmd->count("--m") > 0;
      return cmd_fit(fit_opt);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_opt);
    if (bench_cmd->parsed()) return cmd_bench(bench_opt);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: malformed document: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace polyfit::cli

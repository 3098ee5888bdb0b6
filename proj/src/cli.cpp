#include "covkern/cli.hpp"

#include "covkern/bandwidth.hpp"
#include "covkern/benchmark.hpp"
#include "covkern/bootstrap.hpp"
#include "covkern/error.hpp"
#include "covkern/simulation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef COVKERN_VERSION
#define COVKERN_VERSION "0.0.0"
#endif

namespace covkern::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error("cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j)
{
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_manifest(const fs::path& dir, const std::string& sub, const json& config)
{
  write_json(dir / "manifest.json", {{"tool", "covkern"},
                                     {"version", COVKERN_VERSION},
                                     {"subcommand", sub},
                                     {"config", config}});
}

json report_json(const BandwidthReport& r)
{
  json d = json::object();
  for (const auto& [k, v] : r.diagnostics)
    d[k] = v;
  json j = {{"method", r.method}, {"h", r.h}, {"diagnostics", d}};
  if (!r.curve.empty()) {
    json c = json::array();
    for (const auto& [h, v] : r.curve)
      c.push_back({h, v});
    j["curve"] = c;
  }
  return j;
}

// ---- shared config pieces ----------------------------------------------

struct Inputs {
  RasterCovariate raster;
  PointPattern pattern;
  CovariateDistribution dist;
  TransformedSample sample;
};

std::optional<double> gstar_bw(const json& c)
{
  if (!c.contains("gstar_bandwidth") || c.at("gstar_bandwidth").is_null())
    return std::nullopt;
  return c.at("gstar_bandwidth").get<double>();
}

CovariateDistribution distribution(const RasterCovariate& raster, const json& c)
{
  return spatial_cdf(raster, c.at("n_z").get<std::size_t>(), gstar_bw(c));
}

Inputs load_inputs(const json& c)
{
  auto raster = load_raster(c.at("raster").get<std::string>());
  auto pattern = load_pattern(c.at("pattern").get<std::string>(), raster.window());
  auto dist = distribution(raster, c);
  auto sample = transform_sample(pattern, raster, dist);
  return {std::move(raster), std::move(pattern), std::move(dist), std::move(sample)};
}

void check_kernel(const json& c) { Kernel::from_name(c.at("kernel").get<std::string>()); }

void check_grid(const json& c)
{
  if (c.at("n_z").get<std::size_t>() < 64)
    throw UsageError("--nz must be at least 64");
  if (auto bw = gstar_bw(c); bw && !(*bw > 0.0))
    throw UsageError("--gstar-bandwidth must be positive");
}

void check_common(const json& c)
{
  check_kernel(c);
  check_grid(c);
}

BandwidthReport select_bandwidth(const std::string& method, const Inputs& in, const Kernel& k,
                                 const json& c)
{
  if (method == "silverman")
    return silverman(in.sample);
  if (method == "rt")
    return rule_of_thumb(in.sample, in.dist, k, c.at("exact_a").get<bool>());
  if (method == "boot")
    return h_boot(in.sample, in.dist, k);
  if (method == "cv") {
    const auto grid = default_h_grid(silverman(in.sample).h, c.at("cv_points").get<std::size_t>(),
                                     c.at("cv_decades").get<double>());
    return cv_bandwidth(in.sample, in.dist, k, grid);
  }
  throw UsageError("unknown bandwidth method '" + method + "'");
}

// ---- subcommands -------------------------------------------------------

void run_gstar(const json& c, const fs::path& dir, std::ostream&)
{
  const auto raster = load_raster(c.at("raster").get<std::string>());
  const auto dist = distribution(raster, c);
  auto f = open_out(dir / "gstar.csv");
  f << "z,g_star,G_star\n";
  for (std::size_t j = 0; j < dist.size(); ++j)
    f << num(dist.grid()[j]) << ',' << num(dist.g_star()[j]) << ',' << num(dist.G_star()[j])
      << '\n';
}

void run_simulate(const json& c, const fs::path& dir, std::ostream& out)
{
  GRFSpec grf;
  const auto& g = c.at("grf");
  grf.sigma = g.at("sigma");
  grf.range_s = g.at("range_s");
  grf.ncols = g.at("ncols");
  grf.nrows = g.at("nrows");
  grf.seed = g.at("seed");
  grf.padding = g.at("padding");
  const auto model = ModelSpec::standard(c.at("model"), c.at("m"));
  const auto sc = build_scenario(model, grf);
  Rng rng = substream(c.at("seed").get<std::uint64_t>(), {0x5111ULL});
  const auto pattern = simulate_poisson(sc.intensity, rng);
  save_raster(sc.observed, dir / "covariate.asc");
  if (model.model_id == 2)
    save_raster(sc.generating, dir / "generating.asc");
  save_raster(sc.intensity, dir / "intensity.asc");
  save_pattern(pattern, dir / "pattern.csv");
  out << "simulated " << pattern.size() << " events\n";
}

void run_bandwidth(const json& c, const fs::path& dir, std::ostream& out)
{
  const auto in = load_inputs(c);
  const Kernel k = Kernel::from_name(c.at("kernel").get<std::string>());
  const auto r = select_bandwidth(c.at("method").get<std::string>(), in, k, c);
  const json j = report_json(r);
  write_json(dir / "bandwidth.json", j);
  out << j.dump(2) << '\n';
}

struct BandwidthSpec {
  std::optional<double> value;
  std::string method;
};

BandwidthSpec parse_bandwidth(const std::string& s)
{
  if (s.rfind("auto:", 0) == 0) {
    const std::string m = s.substr(5);
    if (m != "silverman" && m != "rt" && m != "boot" && m != "cv")
      throw UsageError("unknown bandwidth selector '" + m + "'");
    return {std::nullopt, m};
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(v > 0.0) || !std::isfinite(v))
    throw UsageError("--bandwidth must be a positive number or auto:<method>, got '" + s + "'");
  return {v, ""};
}

void run_estimate(const json& c, const fs::path& dir, std::ostream& out)
{
  const auto in = load_inputs(c);
  const Kernel k = Kernel::from_name(c.at("kernel").get<std::string>());
  const auto spec = parse_bandwidth(c.at("bandwidth").get<std::string>());
  const std::string estimator = c.at("estimator");

  json report;
  if (estimator == "diggle") {
    const double h = *spec.value;
    std::vector<double> lam(in.raster.size());
    for (std::size_t i = 0; i < lam.size(); ++i)
      lam[i] = diggle_estimate(in.pattern, h, in.raster.cell_center(i));
    save_raster(in.raster.with_values(std::move(lam)), dir / "lambda.asc");
    report = {{"estimator", estimator}, {"h", h}};
  } else if (estimator == "guan") {
    BandwidthReport r;
    if (spec.value) {
      r.method = "fixed";
      r.h = *spec.value;
    } else if (spec.method == "cv") {
      const auto grid = default_h_grid(silverman(in.sample).h,
                                       c.at("cv_points").get<std::size_t>(),
                                       c.at("cv_decades").get<double>());
      r = guan_cv_bandwidth(in.sample.z, in.raster, in.dist.grid(), k, grid);
    } else {
      r = select_bandwidth(spec.method, in, k, c);
    }
    const GuanTable table(in.raster, in.dist.grid(), r.h, k);
    const auto est = table.intensity(in.sample.z, in.raster);
    save_raster(est.lambda, dir / "lambda.asc");
    const auto numer = table.numerator(in.sample.z);
    auto f = open_out(dir / "rho.csv");
    f << "z,rho\n";
    for (std::size_t j = 0; j < numer.size(); ++j) {
      const double q = table.q()[j];
      f << num(in.dist.grid()[j]) << ',' << num(q > 0.0 ? numer[j] / q : 0.0) << '\n';
    }
    report = {{"estimator", estimator},
              {"bandwidth", report_json(r)},
              {"provenance", est.provenance},
              {"clamped_cells", est.clamped_cells}};
  } else {
    BandwidthReport r;
    if (spec.value) {
      r.method = "fixed";
      r.h = *spec.value;
    } else {
      r = select_bandwidth(spec.method, in, k, c);
    }
    const auto rho = estimate_rho(in.sample, in.dist, r.h, k);
    const auto est = lambda_hat(rho, in.raster);
    save_raster(est.lambda, dir / "lambda.asc");
    auto f = open_out(dir / "rho.csv");
    f << "z,rho\n";
    for (std::size_t j = 0; j < rho.rho_hat.size(); ++j)
      f << num(rho.grid[j]) << ',' << num(rho.rho_hat[j]) << '\n';
    report = {{"estimator", estimator},
              {"bandwidth", report_json(r)},
              {"m_hat", rho.m_hat},
              {"n", in.sample.n()},
              {"provenance", est.provenance},
              {"clamped_cells", est.clamped_cells}};
  }
  write_json(dir / "estimate.json", report);
  out << report.dump(2) << '\n';
}

void run_bootstrap(const json& c, const fs::path& dir, std::ostream& out)
{
  const auto in = load_inputs(c);
  const Kernel k = Kernel::from_name(c.at("kernel").get<std::string>());
  double b = 0.0;
  json rt_json;
  if (c.at("pilot").is_string()) {
    const auto rt = rule_of_thumb(in.sample, in.dist, k);
    b = pilot_bandwidth(rt, in.sample.n());
    rt_json = report_json(rt);
  } else {
    b = c.at("pilot").get<double>();
  }
  const auto boot = h_boot_with_pilot(in.sample, in.dist, k, b);
  const auto world = build_world(in.sample, in.dist, b, k, c.at("seed").get<std::uint64_t>());
  json j = {{"m_hat", world.m_hat}, {"pilot_b", b}, {"h_boot", boot.h},
            {"report", report_json(boot)}};
  if (!rt_json.is_null())
    j["rule_of_thumb"] = rt_json;

  const auto B = c.at("replicates").get<std::size_t>();
  if (B > 0) {
    const auto hs = default_h_grid(boot.h, c.at("h_points").get<std::size_t>(), 1.0);
    auto f = open_out(dir / "mise_star.csv");
    f << "h,amise_star,mise_star_closed_form,mise_star_mc,mise_star_mc_se\n";
    for (double h : hs) {
      const auto mc = mise_star_monte_carlo(world, h, B, c.at("threads").get<unsigned>());
      f << num(h) << ',' << num(amise_star(world, h)) << ',' << num(mise_star_closed_form(world, h))
        << ',' << num(mc.estimate) << ',' << num(mc.standard_error) << '\n';
    }
  }
  write_json(dir / "bootstrap.json", j);
  out << j.dump(2) << '\n';
}

void run_benchmark_cmd(const json& c, const fs::path& dir, std::ostream& out)
{
  const auto cfg = c.get<BenchmarkConfig>();
  const auto result = run_benchmark(cfg);
  {
    auto f = open_out(dir / "results.csv");
    write_benchmark_csv(result, f);
  }
  write_json(dir / "results.json", benchmark_json(result));
  write_benchmark_csv(result, out);
}

// ---- validation of resolved configs ------------------------------------

void validate(const std::string& sub, const json& c)
{
  try {
    if (sub == "gstar") {
      check_grid(c);
    } else if (sub == "simulate") {
      ModelSpec::standard(c.at("model"), c.at("m")).validate();
      GRFSpec g;
      g.sigma = c.at("grf").at("sigma");
      g.range_s = c.at("grf").at("range_s");
      g.ncols = c.at("grf").at("ncols");
      g.nrows = c.at("grf").at("nrows");
      g.padding = c.at("grf").at("padding");
      g.validate();
    } else if (sub == "bandwidth") {
      check_common(c);
      const std::string m = c.at("method");
      if (m != "silverman" && m != "rt" && m != "boot" && m != "cv")
        throw UsageError("unknown bandwidth method '" + m + "'");
    } else if (sub == "estimate") {
      check_common(c);
      const std::string e = c.at("estimator");
      if (e != "weighted" && e != "guan" && e != "diggle")
        throw UsageError("unknown estimator '" + e + "'");
      const auto spec = parse_bandwidth(c.at("bandwidth"));
      if (e == "diggle" && !spec.value)
        throw UsageError("the diggle estimator needs a numeric --bandwidth");
    } else if (sub == "bootstrap") {
      check_common(c);
      const auto& p = c.at("pilot");
      if (p.is_string() ? p.get<std::string>() != "auto" : !(p.get<double>() > 0.0))
        throw UsageError("--pilot must be a positive number or auto");
      if (c.at("h_points").get<std::size_t>() < 2)
        throw UsageError("--h-points must be at least 2");
    } else if (sub == "benchmark") {
      c.get<BenchmarkConfig>().validate();
    } else {
      throw UsageError("unknown subcommand '" + sub + "'");
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

json parse_pilot(const std::string& s)
{
  if (s == "auto")
    return "auto";
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size())
      return v;
  } catch (const std::exception&) {
  }
  throw UsageError("--pilot must be a positive number or auto, got '" + s + "'");
}

json read_json_file(const fs::path& path)
{
  std::ifstream f(path);
  if (!f)
    throw UsageError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

} // namespace

void execute(const std::string& subcommand, const json& config, const fs::path& out_dir,
             std::ostream& out)
{
  validate(subcommand, config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw Error("cannot create " + out_dir.string() + ": " + ec.message());
  if (subcommand == "gstar")
    run_gstar(config, out_dir, out);
  else if (subcommand == "simulate")
    run_simulate(config, out_dir, out);
  else if (subcommand == "bandwidth")
    run_bandwidth(config, out_dir, out);
  else if (subcommand == "estimate")
    run_estimate(config, out_dir, out);
  else if (subcommand == "bootstrap")
    run_bootstrap(config, out_dir, out);
  else
    run_benchmark_cmd(config, out_dir, out);
  write_manifest(out_dir, subcommand, config);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Kernel intensity estimation for spatial point patterns with a covariate",
               "covkern"};
  app.set_version_flag("--version", COVKERN_VERSION);
  app.require_subcommand(1);

  std::string out_dir = ".";
  std::string kernel = "gaussian";
  std::size_t n_z = 513;
  std::optional<double> gstar_bandwidth;
  bool exact_a = false;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string raster_path, pattern_path;
  std::size_t cv_points = 40;
  double cv_decades = 2.0;

  auto add_out = [&](CLI::App* s) {
    s->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
  };
  auto add_dist = [&](CLI::App* s) {
    s->add_option("--raster", raster_path, "Covariate raster (ASCII grid)")->required();
    s->add_option("--nz", n_z, "Nodes of the covariate grid")->capture_default_str();
    s->add_option("--gstar-bandwidth", gstar_bandwidth,
                  "Smoothing bandwidth for g* (default: Silverman on cell values)");
  };
  auto add_est = [&](CLI::App* s) {
    add_dist(s);
    s->add_option("--pattern", pattern_path, "Point pattern CSV with header x,y")->required();
    s->add_option("--kernel", kernel, "gaussian or epanechnikov")->capture_default_str();
    s->add_flag("--exact-A", exact_a, "Use the series A(n) instead of 1/n in the rule of thumb");
    s->add_option("--cv-points", cv_points, "Points of the CV grid")->capture_default_str();
    s->add_option("--cv-decades", cv_decades, "Width of the CV grid in decades")
      ->capture_default_str();
    add_out(s);
  };

  auto* gstar = app.add_subcommand("gstar", "Tabulate g* and G* for a raster");
  add_dist(gstar);
  add_out(gstar);

  auto* simulate = app.add_subcommand("simulate", "Simulate a benchmark model");
  int model = 1;
  double m = 100.0;
  GRFSpec grf;
  std::optional<std::uint64_t> grf_seed;
  simulate->add_option("--model", model, "Model 1, 2 or 3")->capture_default_str();
  simulate->add_option("--m", m, "Expected number of events")->capture_default_str();
  simulate->add_option("--seed", seed, "Seed for the pattern")->capture_default_str();
  simulate->add_option("--grf-seed", grf_seed, "Seed for the covariate field (default: --seed)");
  simulate->add_option("--grid", grf.ncols, "Raster cells per side")->capture_default_str();
  simulate->add_option("--sigma", grf.sigma, "Field standard deviation")->capture_default_str();
  simulate->add_option("--range", grf.range_s, "Field correlation range")->capture_default_str();
  simulate->add_option("--padding", grf.padding, "Circulant embedding padding factor")
    ->capture_default_str();
  add_out(simulate);

  auto* bandwidth = app.add_subcommand("bandwidth", "Select a bandwidth");
  std::string method = "boot";
  bandwidth->add_option("--method", method, "silverman, rt, boot or cv")->capture_default_str();
  add_est(bandwidth);

  auto* estimate = app.add_subcommand("estimate", "Estimate the intensity");
  std::string estimator = "weighted";
  std::string bw_spec = "auto:boot";
  estimate->add_option("--estimator", estimator, "weighted, guan or diggle")
    ->capture_default_str();
  estimate->add_option("--bandwidth", bw_spec, "h or auto:{silverman,rt,boot,cv}")
    ->capture_default_str();
  estimate->add_option("--seed", seed, "Recorded in the manifest")->capture_default_str();
  add_est(estimate);

  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap bandwidth and MISE* curve");
  std::string pilot = "auto";
  std::size_t replicates = 0;
  std::size_t h_points = 21;
  bootstrap->add_option("--pilot", pilot, "Pilot bandwidth b or auto")->capture_default_str();
  bootstrap->add_option("--replicates", replicates, "Resamples per h for the MC MISE* curve")
    ->capture_default_str();
  bootstrap->add_option("--h-points", h_points, "Points of the MISE* curve")
    ->capture_default_str();
  bootstrap->add_option("--seed", seed, "Resampling seed")->capture_default_str();
  bootstrap->add_option("--threads", threads, "Worker threads (0: COVKERN_THREADS or all)");
  add_est(bootstrap);

  auto* benchmark = app.add_subcommand("benchmark", "Run the simulation benchmark");
  std::string config_path;
  std::optional<std::size_t> bench_reps;
  std::optional<std::uint64_t> bench_seed;
  std::optional<unsigned> bench_threads;
  benchmark->add_option("--config", config_path, "Benchmark configuration JSON")->required();
  benchmark->add_option("--replicates", bench_reps, "Override the replicate count");
  benchmark->add_option("--seed", bench_seed, "Override the master seed");
  benchmark->add_option("--threads", bench_threads, "Worker threads (0: COVKERN_THREADS or all)");
  add_out(benchmark);

  auto* replay = app.add_subcommand("replay", "Re-run a recorded manifest");
  std::string manifest_path;
  std::optional<std::string> replay_out;
  replay->add_option("--manifest", manifest_path, "manifest.json to replay")->required();
  replay->add_option("-o,--out", replay_out, "Output directory (default: the manifest's)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << COVKERN_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    json config;
    fs::path dir = out_dir;
    auto base = [&] {
      return json{{"raster", raster_path},
                  {"n_z", n_z},
                  {"gstar_bandwidth", gstar_bandwidth ? json(*gstar_bandwidth) : json(nullptr)}};
    };
    auto est_base = [&] {
      json c = base();
      c["pattern"] = pattern_path;
      c["kernel"] = kernel;
      c["exact_a"] = exact_a;
      c["cv_points"] = cv_points;
      c["cv_decades"] = cv_decades;
      return c;
    };
    std::string run_name = name;
    if (name == "gstar") {
      config = base();
    } else if (name == "simulate") {
      config = {{"model", model},
                {"m", m},
                {"seed", seed},
                {"grf",
                 {{"sigma", grf.sigma},
                  {"range_s", grf.range_s},
                  {"ncols", grf.ncols},
                  {"nrows", grf.ncols},
                  {"seed", grf_seed.value_or(seed)},
                  {"padding", grf.padding}}}};
    } else if (name == "bandwidth") {
      config = est_base();
      config["method"] = method;
    } else if (name == "estimate") {
      config = est_base();
      config["estimator"] = estimator;
      config["bandwidth"] = bw_spec;
      config["seed"] = seed;
    } else if (name == "bootstrap") {
      config = est_base();
      config["pilot"] = parse_pilot(pilot);
      config["replicates"] = replicates;
      config["h_points"] = h_points;
      config["seed"] = seed;
      config["threads"] = threads;
    } else if (name == "benchmark") {
      BenchmarkConfig cfg;
      try {
        cfg = read_json_file(config_path).get<BenchmarkConfig>();
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        throw UsageError(config_path + ": " + e.what());
      }
      if (bench_reps)
        cfg.replicates = *bench_reps;
      if (bench_seed)
        cfg.seed = *bench_seed;
      if (bench_threads)
        cfg.threads = *bench_threads;
      config = cfg;
    } else {
      const json manifest = read_json_file(manifest_path);
      if (!manifest.contains("subcommand") || !manifest.contains("config"))
        throw UsageError(manifest_path + " is not a covkern manifest");
      run_name = manifest.at("subcommand").get<std::string>();
      config = manifest.at("config");
      dir = replay_out ? fs::path(*replay_out) : fs::path(manifest_path).parent_path();
      if (dir.empty())
        dir = ".";
    }
    execute(run_name, config, dir, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

int dispatch(int argc, char** argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i)
    args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

} // namespace covkern::cli

#include "covkern/benchmark.hpp"

#include "covkern/bandwidth.hpp"
#include "covkern/bootstrap.hpp"
#include "covkern/error.hpp"
#include "covkern/parallel.hpp"
#include "covkern/quadrature.hpp"
#include "covkern/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>

namespace covkern {

namespace {

const std::vector<std::string> kSelectors{"silverman", "rt", "boot", "cv"};
const std::vector<std::string> kColumns{"mise", "silverman", "rt",     "boot",
                                        "cv",   "mise_guan", "cv_guan"};

bool has(const std::vector<std::string>& v, const std::string& s)
{
  return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

void BenchmarkConfig::validate() const
{
  if (models.empty() || m_values.empty())
    throw ParameterError("benchmark needs at least one model and one m value");
  for (int id : models)
    ModelSpec::standard(id, 1.0);
  for (double m : m_values)
    if (!(m > 0.0) || !std::isfinite(m))
      throw ParameterError("m values must be positive");
  if (replicates < 2)
    throw ParameterError("benchmark needs at least two replicates");
  for (const auto& s : selectors)
    if (!has(kSelectors, s))
      throw ParameterError("unknown selector '" + s + "'");
  Kernel::from_name(kernel);
  if (n_z < 64)
    throw ParameterError("z grid needs at least 64 nodes");
  grf.validate();
  if (!(h_grid.lo_factor > 0.0) || !(h_grid.hi_factor > h_grid.lo_factor) || h_grid.count < 3)
    throw ParameterError("h grid needs 0 < lo_factor < hi_factor and at least 3 points");
  if (cv_points < 3 || !(cv_decades > 0.0))
    throw ParameterError("cv grid needs at least 3 points over a positive span");
}

void to_json(nlohmann::json& j, const BenchmarkConfig& c)
{
  j = nlohmann::json{
    {"models", c.models},
    {"m_values", c.m_values},
    {"replicates", c.replicates},
    {"selectors", c.selectors},
    {"guan", c.guan},
    {"seed", c.seed},
    {"kernel", c.kernel},
    {"n_z", c.n_z},
    {"exact_a", c.exact_a},
    {"grf",
     {{"sigma", c.grf.sigma},
      {"range_s", c.grf.range_s},
      {"ncols", c.grf.ncols},
      {"nrows", c.grf.nrows},
      {"seed", c.grf.seed},
      {"padding", c.grf.padding}}},
    {"h_grid",
     {{"lo_factor", c.h_grid.lo_factor},
      {"hi_factor", c.h_grid.hi_factor},
      {"count", c.h_grid.count}}},
    {"cv_points", c.cv_points},
    {"cv_decades", c.cv_decades},
    {"threads", c.threads},
  };
}

namespace {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out)
{
  if (j.contains(key))
    j.at(key).get_to(out);
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where)
{
  if (!j.is_object())
    throw ParameterError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ParameterError("unknown key '" + key + "' in " + where);
}

} // namespace

void from_json(const nlohmann::json& j, BenchmarkConfig& c)
{
  reject_unknown(j,
                 {"models", "m_values", "replicates", "selectors", "guan", "seed", "kernel", "n_z",
                  "exact_a", "grf", "h_grid", "cv_points", "cv_decades", "threads"},
                 "benchmark config");
  read_opt(j, "models", c.models);
  read_opt(j, "m_values", c.m_values);
  read_opt(j, "replicates", c.replicates);
  read_opt(j, "selectors", c.selectors);
  read_opt(j, "guan", c.guan);
  read_opt(j, "seed", c.seed);
  read_opt(j, "kernel", c.kernel);
  read_opt(j, "n_z", c.n_z);
  read_opt(j, "exact_a", c.exact_a);
  read_opt(j, "cv_points", c.cv_points);
  read_opt(j, "cv_decades", c.cv_decades);
  read_opt(j, "threads", c.threads);
  if (j.contains("grf")) {
    const auto& g = j.at("grf");
    reject_unknown(g, {"sigma", "range_s", "ncols", "nrows", "seed", "padding"}, "grf");
    read_opt(g, "sigma", c.grf.sigma);
    read_opt(g, "range_s", c.grf.range_s);
    read_opt(g, "ncols", c.grf.ncols);
    read_opt(g, "nrows", c.grf.nrows);
    read_opt(g, "seed", c.grf.seed);
    read_opt(g, "padding", c.grf.padding);
  }
  if (j.contains("h_grid")) {
    const auto& h = j.at("h_grid");
    reject_unknown(h, {"lo_factor", "hi_factor", "count"}, "h_grid");
    read_opt(h, "lo_factor", c.h_grid.lo_factor);
    read_opt(h, "hi_factor", c.h_grid.hi_factor);
    read_opt(h, "count", c.h_grid.count);
  }
}

const SelectorSummary* CellResult::find(const std::string& column) const
{
  for (const auto& s : columns)
    if (s.column == column)
      return &s;
  return nullptr;
}

namespace {

struct SelectorOutcome {
  bool ok = false;
  double h = 0.0;
  double ise = 0.0;
  bool boundary = false;
};

struct Replicate {
  bool ok = false;
  std::size_t n = 0;
  std::optional<TransformedSample> sample;
  std::vector<double> mise_curve;     // \int (f_hat_h - f)^2 per grid h
  std::vector<double> guan_ise_curve; // ISE_rel of Guan's estimator per grid h
  std::map<std::string, SelectorOutcome> selectors;
  SelectorOutcome cv_guan;
};

//! Grid argmin refined by a parabola through the neighbouring points in log h.
std::pair<double, bool> refined_argmin(std::span<const double> h, std::span<const double> v)
{
  const auto [i, boundary] = grid_argmin(v);
  if (boundary)
    return {h[i], true};
  const double x0 = std::log(h[i - 1]), x1 = std::log(h[i]), x2 = std::log(h[i + 1]);
  const double y0 = v[i - 1], y1 = v[i], y2 = v[i + 1];
  const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
  const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
  const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
  if (!(a > 0.0))
    return {h[i], false};
  const double x = std::clamp(-b / (2.0 * a), x0, x2);
  return {std::exp(x), false};
}

//! Normalised f = rho g* / \int rho g* on the distribution grid.
std::vector<double> true_relative_density(const Scenario& sc, const CovariateDistribution& dist)
{
  const UniformGrid& grid = dist.grid();
  std::vector<double> f(grid.size(), 0.0);
  if (sc.rho) {
    const auto g = dist.g_star();
    for (std::size_t j = 0; j < f.size(); ++j)
      f[j] = sc.rho(grid[j]) * g[j];
  } else {
    // The intensity is not a function of the observed covariate; its
    // projection E[lambda | Z = z] g*(z) is the kernel-smoothed intensity mass
    // at level z, with the same smoothing that defines g*.
    const double s = dist.smoothing_bandwidth();
    const auto z = sc.observed.values();
    const auto lam = sc.intensity.values();
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double lo = z[c] - 9.0 * s, hi = z[c] + 9.0 * s;
      const auto j0 = static_cast<std::size_t>(
        std::clamp(std::ceil((lo - grid.lo()) / grid.step()), 0.0, double(grid.size() - 1)));
      for (std::size_t j = j0; j < grid.size() && grid[j] <= hi; ++j) {
        const double u = (grid[j] - z[c]) / s;
        f[j] += lam[c] * std::exp(-0.5 * u * u);
      }
    }
  }
  const double mass = simpson(f, grid.step());
  if (!(mass > 0.0))
    throw NumericError("true relative density has zero mass");
  for (double& v : f)
    v /= mass;
  return f;
}

SelectorSummary summarise(const std::string& column, std::span<const SelectorOutcome> outcomes,
                          double h_ref)
{
  SelectorSummary s;
  s.column = column;
  std::vector<double> ise, rel;
  double hsum = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++s.failures;
      continue;
    }
    ise.push_back(o.ise);
    rel.push_back((o.h - h_ref) / h_ref);
    hsum += o.h;
    if (o.boundary)
      ++s.boundary_hits;
  }
  s.used = ise.size();
  if (s.used == 0)
    return s;
  s.e1 = stats::mean(ise);
  s.e3 = stats::mean(rel);
  s.mean_h = hsum / static_cast<double>(s.used);
  if (s.used > 1) {
    s.e2 = stats::sd(ise);
    s.e1_se = s.e2 / std::sqrt(static_cast<double>(s.used));
    s.e3_se = stats::sd(rel) / std::sqrt(static_cast<double>(s.used));
  }
  return s;
}

CellResult run_cell(const BenchmarkConfig& cfg, int model, double m, unsigned threads)
{
  const Kernel k = Kernel::from_name(cfg.kernel);
  const Scenario sc = build_scenario(ModelSpec::standard(model, m), cfg.grf);
  const CovariateDistribution dist = spatial_cdf(sc.observed, cfg.n_z);
  const UniformGrid& zgrid = dist.grid();
  const auto f_true = true_relative_density(sc, dist);

  const double sd_z = stats::sd(sc.observed.values());
  const auto hg = log_spaced(cfg.h_grid.lo_factor * sd_z, cfg.h_grid.hi_factor * sd_z,
                             cfg.h_grid.count);
  std::vector<GuanTable> tables;
  if (cfg.guan)
    for (double h : hg)
      tables.emplace_back(sc.observed, zgrid, h, k);

  const std::uint64_t mbits = std::bit_cast<std::uint64_t>(m);
  std::vector<Replicate> reps(cfg.replicates);

  parallel_for(cfg.replicates, threads, [&](std::size_t r) {
    Replicate& rep = reps[r];
    Rng rng = substream(cfg.seed, {0xBE7CULL, static_cast<std::uint64_t>(model), mbits, r});
    const PointPattern pattern = simulate_poisson(sc.intensity, rng);
    rep.n = pattern.size();
    if (pattern.size() < 2)
      return;
    TransformedSample sample;
    try {
      sample = transform_sample(pattern, sc.observed, dist);
    } catch (const NumericError&) {
      return;
    }
    rep.ok = true;

    rep.mise_curve.resize(hg.size());
    for (std::size_t i = 0; i < hg.size(); ++i) {
      const auto f = f_hat_on_grid(sample, dist, hg[i], k);
      std::vector<double> d(f.size());
      for (std::size_t j = 0; j < f.size(); ++j)
        d[j] = (f[j] - f_true[j]) * (f[j] - f_true[j]);
      rep.mise_curve[i] = simpson(d, zgrid.step());
    }

    auto score = [&](double h) {
      return ise_rel(lambda_hat(estimate_rho(sample, dist, h, k), sc.observed), sc.intensity);
    };
    std::optional<double> h_silv;
    try {
      h_silv = silverman(sample).h;
    } catch (const Error&) {
    }
    for (const auto& name : cfg.selectors) {
      SelectorOutcome o;
      try {
        if (name == "silverman") {
          if (!h_silv)
            throw NumericError("silverman failed");
          o.h = *h_silv;
        } else if (name == "rt") {
          o.h = rule_of_thumb(sample, dist, k, cfg.exact_a).h;
        } else if (name == "boot") {
          o.h = h_boot(sample, dist, k).h;
        } else {
          if (!h_silv)
            throw NumericError("cv grid needs a Silverman bandwidth");
          const auto grid = default_h_grid(*h_silv, cfg.cv_points, cfg.cv_decades);
          const auto rep_cv = cv_bandwidth(sample, dist, k, grid);
          o.h = rep_cv.h;
          o.boundary = rep_cv.boundary_hit;
        }
        o.ise = score(o.h);
        o.ok = std::isfinite(o.ise);
      } catch (const Error&) {
        o.ok = false;
      }
      rep.selectors[name] = o;
    }

    if (cfg.guan) {
      rep.guan_ise_curve.assign(hg.size(), std::nan(""));
      std::vector<double> cv(hg.size(), std::nan(""));
      for (std::size_t i = 0; i < hg.size(); ++i) {
        try {
          const auto est = tables[i].intensity(sample.z, sc.observed);
          rep.guan_ise_curve[i] = ise_rel(est, sc.intensity);
          cv[i] = guan_cv_score(tables[i], sample.z, est, k);
        } catch (const Error&) {
        }
      }
      try {
        const auto [best, boundary] = grid_argmin(cv);
        const double v = rep.guan_ise_curve[best];
        rep.cv_guan = {std::isfinite(v), hg[best], v, boundary};
      } catch (const NumericError&) {
      }
    }
    rep.sample = std::move(sample);
  });

  CellResult cell;
  cell.model = model;
  cell.m = m;
  cell.replicates = cfg.replicates;
  double nsum = 0.0;
  for (const auto& rep : reps) {
    nsum += static_cast<double>(rep.n);
    if (!rep.ok)
      ++cell.failed_replicates;
  }
  cell.mean_n = nsum / static_cast<double>(cfg.replicates);
  if (cell.failed_replicates == cfg.replicates)
    throw NumericError("every benchmark replicate failed");

  // Merge in replicate order.
  auto mean_curve = [&](auto member) {
    std::vector<double> out(hg.size(), 0.0);
    std::vector<std::size_t> count(hg.size(), 0);
    for (const auto& rep : reps) {
      if (!rep.ok)
        continue;
      const auto& c = rep.*member;
      for (std::size_t i = 0; i < c.size(); ++i)
        if (std::isfinite(c[i])) {
          out[i] += c[i];
          ++count[i];
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = count[i] ? out[i] / static_cast<double>(count[i]) : std::nan("");
    return out;
  };
  cell.h_grid = hg;
  cell.mise_curve = mean_curve(&Replicate::mise_curve);
  const auto [h_mise, mise_boundary] = refined_argmin(hg, cell.mise_curve);
  cell.h_mise = h_mise;

  std::vector<SelectorOutcome> at_mise(reps.size());
  parallel_for(reps.size(), threads, [&](std::size_t r) {
    if (!reps[r].ok)
      return;
    const auto& s = *reps[r].sample;
    const double v =
      ise_rel(lambda_hat(estimate_rho(s, dist, h_mise, k), sc.observed), sc.intensity);
    at_mise[r] = {std::isfinite(v), h_mise, v, mise_boundary};
  });
  cell.columns.push_back(summarise("mise", at_mise, h_mise));

  for (const auto& name : kSelectors) {
    if (!has(cfg.selectors, name))
      continue;
    std::vector<SelectorOutcome> outs(reps.size());
    for (std::size_t r = 0; r < reps.size(); ++r)
      if (reps[r].ok)
        outs[r] = reps[r].selectors.at(name);
    cell.columns.push_back(summarise(name, outs, h_mise));
  }

  if (cfg.guan) {
    cell.guan_ise_curve = mean_curve(&Replicate::guan_ise_curve);
    const auto [h_mg, mg_boundary] = refined_argmin(hg, cell.guan_ise_curve);
    cell.h_mise_guan = h_mg;
    const GuanTable table(sc.observed, zgrid, h_mg, k);
    std::vector<SelectorOutcome> at_mg(reps.size());
    parallel_for(reps.size(), threads, [&](std::size_t r) {
      if (!reps[r].ok)
        return;
      try {
        const double v = ise_rel(table.intensity(reps[r].sample->z, sc.observed), sc.intensity);
        at_mg[r] = {std::isfinite(v), h_mg, v, mg_boundary};
      } catch (const Error&) {
      }
    });
    cell.columns.push_back(summarise("mise_guan", at_mg, h_mg));
    std::vector<SelectorOutcome> cvg(reps.size());
    for (std::size_t r = 0; r < reps.size(); ++r)
      if (reps[r].ok)
        cvg[r] = reps[r].cv_guan;
    cell.columns.push_back(summarise("cv_guan", cvg, h_mg));
  }
  return cell;
}

} // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config)
{
  config.validate();
  const unsigned threads = resolve_threads(config.threads);
  BenchmarkResult result;
  result.config = config;
  for (int model : config.models)
    for (double m : config.m_values)
      result.cells.push_back(run_cell(config, model, m, threads));
  return result;
}

namespace {

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

} // namespace

void write_benchmark_csv(const BenchmarkResult& result, std::ostream& out)
{
  out << "model,m,criterion,h_MISE,h_Silv,h_RT,h_Boot,h_CV,h_MISE_Guan,h_CV_Guan\n";
  for (const auto& cell : result.cells) {
    for (const char* crit : {"e1", "e2", "e3"}) {
      out << cell.model << ',' << fmt(cell.m) << ',' << crit;
      for (const auto& col : kColumns) {
        const SelectorSummary* s = cell.find(col);
        out << ',';
        if (!s || s->used == 0) {
          out << "NA";
          continue;
        }
        const std::string c = crit;
        out << fmt(c == "e1" ? s->e1 : c == "e2" ? s->e2 : s->e3);
      }
      out << '\n';
    }
  }
}

nlohmann::json benchmark_json(const BenchmarkResult& result)
{
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : result.cells) {
    nlohmann::json cols = nlohmann::json::object();
    for (const auto& s : cell.columns)
      cols[s.column] = {{"e1", s.e1},         {"e2", s.e2},         {"e3", s.e3},
                        {"e1_se", s.e1_se},   {"e3_se", s.e3_se},   {"mean_h", s.mean_h},
                        {"used", s.used},     {"failures", s.failures},
                        {"boundary_hits", s.boundary_hits}};
    nlohmann::json curve = nlohmann::json::array();
    for (std::size_t i = 0; i < cell.h_grid.size(); ++i) {
      nlohmann::json row = {{"h", cell.h_grid[i]}, {"mise", cell.mise_curve[i]}};
      if (i < cell.guan_ise_curve.size())
        row["guan_ise_rel"] = cell.guan_ise_curve[i];
      curve.push_back(row);
    }
    cells.push_back({{"model", cell.model},
                     {"m", cell.m},
                     {"replicates", cell.replicates},
                     {"failed_replicates", cell.failed_replicates},
                     {"mean_n", cell.mean_n},
                     {"h_mise", cell.h_mise},
                     {"h_mise_guan", cell.h_mise_guan},
                     {"columns", cols},
                     {"curve", curve}});
  }
  return {{"config", result.config}, {"cells", cells}};
}

} // namespace covkern

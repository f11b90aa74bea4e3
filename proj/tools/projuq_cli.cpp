// Batch experiment front-end: configuration from JSON plus flag overrides,
// outputs under a timestamped run directory with a metadata.json describing
// the resolved configuration. All file contents are deterministic under a
// fixed master seed.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "projuq/projuq.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace projuq;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "projuq-out";
  std::size_t threads = 1;
};

json load_config(const GlobalOptions& g) {
  json cfg = json::object();
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw Error("cannot open config file " + g.config_path);
    in >> cfg;
  }
  if (g.seed) cfg["master_seed"] = *g.seed;
  if (!cfg.contains("master_seed"))
    throw InvalidArgumentError("master_seed is mandatory (config key or --seed)");
  return cfg;
}

std::uint64_t master_seed(const json& cfg) { return cfg.at("master_seed").get<std::uint64_t>(); }

fs::path make_run_dir(const GlobalOptions& g, const std::string& command) {
  std::string base = g.out_dir;
  if (const char* env = std::getenv("PROJUQ_OUT"); env && *env) base = env;
  std::time_t now = std::time(nullptr);
  std::tm tm_buf;
  gmtime_r(&now, &tm_buf);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_buf);
  fs::path dir = fs::path(base) / (command + "-" + stamp);
  for (int k = 2; fs::exists(dir); ++k)
    dir = fs::path(base) / (command + "-" + std::string(stamp) + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

void write_metadata(const fs::path& dir, const std::string& command, const json& resolved) {
  json meta;
  meta["command"] = command;
  meta["config"] = resolved;
  std::ofstream out(dir / "metadata.json");
  out << meta.dump(2) << "\n";
}

MatrixHandle load_problem_matrix(const json& cfg, std::uint64_t seed) {
  if (cfg.contains("path")) return read_matrix_market(cfg.at("path").get<std::string>());
  SpdEnsembleSpec spec;
  spec.n = cfg.value("n", 400);
  spec.scale = cfg.value("scale", 10.0);
  Rng rng(seed);
  return random_spd(spec, rng);
}

KrylovVariant parse_variant(const std::string& name) {
  if (name == "cg_like") return KrylovVariant::cg_like;
  if (name == "gmres_like") return KrylovVariant::gmres_like;
  throw InvalidArgumentError("unknown variant '" + name + "'");
}

PriorMode parse_prior_mode(const std::string& name) {
  if (name == "trivial") return PriorMode::trivial;
  if (name == "a_inverse") return PriorMode::a_inverse;
  if (name == "ata_inverse") return PriorMode::ata_inverse;
  if (name == "cheap") return PriorMode::cheap;
  if (name == "expensive") return PriorMode::expensive;
  throw InvalidArgumentError("unknown prior mode '" + name + "'");
}

StatisticRegime parse_regime(const std::string& name) {
  if (name == "point") return StatisticRegime::point_estimation;
  if (name == "hierarchical") return StatisticRegime::hierarchical;
  throw InvalidArgumentError("unknown regime '" + name + "'");
}

// ---------------------------------------------------------------------------

int cmd_assess(const GlobalOptions& g) {
  json cfg = load_config(g);
  json resolved;
  resolved["master_seed"] = master_seed(cfg);
  resolved["n"] = cfg.value("n", 100);
  resolved["scale"] = cfg.value("scale", 10.0);
  resolved["m_list"] = cfg.value("m_list", std::vector<std::size_t>{5, 20});
  resolved["matrices"] = cfg.value("matrices", 50);
  resolved["samples_per_matrix"] = cfg.value("samples_per_matrix", 5);
  resolved["observations"] = cfg.value("observations", 1);
  resolved["alpha"] = cfg.value("alpha", 0.0);
  resolved["beta"] = cfg.value("beta", 0.0);
  resolved["variants"] =
      cfg.value("variants", std::vector<std::string>{"cg_like", "gmres_like"});
  resolved["prior_modes"] = cfg.value(
      "prior_modes", std::vector<std::string>{"cheap", "expensive", "a_inverse"});
  resolved["regimes"] = cfg.value("regimes", std::vector<std::string>{"point"});
  resolved["grid_points"] = cfg.value("grid_points", 512);
  resolved["sampling"] = cfg.value("sampling", std::string("standard_normal"));

  fs::path dir = make_run_dir(g, "assess");
  write_metadata(dir, "assess", resolved);
  CsvWriter csv(dir / "discrepancy.csv", {"m", "variant", "prior_mode", "k",
                                          "statistic_kind", "discrepancy", "n_samples",
                                          "breakdown_count"});
  for (const auto& variant_name : resolved["variants"].get<std::vector<std::string>>()) {
    for (std::size_t m : resolved["m_list"].get<std::vector<std::size_t>>()) {
      for (const auto& mode_name : resolved["prior_modes"].get<std::vector<std::string>>()) {
        for (const auto& regime_name : resolved["regimes"].get<std::vector<std::string>>()) {
          const PriorMode mode = parse_prior_mode(mode_name);
          const StatisticRegime regime = parse_regime(regime_name);
          const bool baseline = mode == PriorMode::trivial ||
                                mode == PriorMode::a_inverse ||
                                mode == PriorMode::ata_inverse;
          if (regime == StatisticRegime::hierarchical && baseline) continue;
          AssessmentSpec spec;
          spec.n = resolved["n"].get<std::size_t>();
          spec.matrix_scale = resolved["scale"].get<double>();
          spec.m = m;
          spec.matrices = resolved["matrices"].get<std::size_t>();
          spec.samples_per_matrix = resolved["samples_per_matrix"].get<std::size_t>();
          spec.variant = parse_variant(variant_name);
          spec.prior_mode = mode;
          spec.regime = regime;
          spec.sampling = resolved["sampling"].get<std::string>() == "prior_consistent"
                              ? SolutionSampling::prior_consistent
                              : SolutionSampling::standard_normal;
          spec.observations = resolved["observations"].get<std::size_t>();
          spec.scale_prior =
              ScalePosterior(resolved["alpha"].get<double>(), resolved["beta"].get<double>());
          spec.master_seed = master_seed(cfg);
          spec.threads = g.threads;
          StatisticSeries series = run_assessment(spec);
          const double disc = discrepancy(series, resolved["grid_points"].get<std::size_t>());
          csv.row({std::to_string(m), variant_name, mode_name,
                   std::to_string(spec.observations),
                   std::string(to_string(regime)) + ":" + series.target.label(),
                   format_double(disc), std::to_string(series.samples.size()),
                   std::to_string(series.breakdowns)});
          const std::string dump = "samples_" + variant_name + "_m" + std::to_string(m) +
                                   "_" + mode_name + "_" + regime_name + ".csv";
          write_samples_csv(dir / dump, series.samples);
        }
      }
    }
  }
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_sstat(const GlobalOptions& g) {
  json cfg = load_config(g);
  json resolved;
  resolved["master_seed"] = master_seed(cfg);
  resolved["matrix"] = cfg.value("matrix", json{{"n", 400}, {"scale", 10.0}});
  resolved["checkpoint_step"] = cfg.value("checkpoint_step", 20);
  resolved["m_max"] = cfg.value("m_max", 200);
  resolved["d"] = cfg.value("d", 5);
  resolved["samples"] = cfg.value("samples", 100);
  resolved["observations"] = cfg.value("observations", 1);
  // number of independent calibration runs the sample budget is spread over;
  // more than one widens the band by the calibration spread itself
  resolved["calibrations"] = cfg.value("calibrations", 1);
  resolved["alpha"] = cfg.value("alpha", 0.0);
  resolved["beta"] = cfg.value("beta", 0.0);

  const std::uint64_t seed = master_seed(cfg);
  MatrixHandle a = load_problem_matrix(resolved["matrix"], seed);
  const std::size_t n = a.rows();
  const std::size_t step = resolved["checkpoint_step"].get<std::size_t>();
  const std::size_t m_max = resolved["m_max"].get<std::size_t>();
  const std::size_t d = resolved["d"].get<std::size_t>();
  const std::size_t samples = resolved["samples"].get<std::size_t>();
  if (step == 0 || m_max + d > n)
    throw InvalidArgumentError("sstat: need checkpoint_step >= 1 and m_max + d <= n");

  fs::path dir = make_run_dir(g, "sstat");
  write_metadata(dir, "sstat", resolved);

  Rng rng = Rng::child(seed, 1);
  Vec xstar(n);
  for (double& c : xstar) c = rng.gaussian();
  Vec b = a.apply(xstar);

  // errors and observations are both taken from plain CG runs so that the
  // band is compared against the solver that actually produced the iterates
  CgKeep keep;
  keep.iterate_stride = step;
  keep.residual_vectors = false;
  keep.directions_lo = step + 1;
  keep.directions_hi = m_max + d;
  CgTrace trace = cg(a, b, Vec(n, 0.0), m_max + d, keep);
  write_cg_trace_csv(dir / "cg_trace.csv", trace);

  const ScalePosterior prior(resolved["alpha"].get<double>(), resolved["beta"].get<double>());
  CsvWriter csv(dir / "sstat.csv", {"m", "exact_A_error", "reid_q05", "reid_q95",
                                    "ours_q05", "ours_q95"});
  for (std::size_t m = step; m <= m_max; m += step) {
    Vec e = sub(xstar, trace.iterate(m));
    const double exact = dot(e, a.apply(e));

    std::vector<double> reid_stats;
    if (trace.iterations() >= m + d && d > 0) {
      ReidCovariance rc = reid_covariance(a, trace, m, d);
      reid_stats.reserve(samples);
      for (std::size_t s = 0; s < samples; ++s) {
        Vec delta = reid_sample(rc, rng);
        reid_stats.push_back(dot(delta, a.apply(delta)));
      }
    } else {
      reid_stats.assign(samples, 0.0);
    }

    const std::size_t n_calib = resolved["calibrations"].get<std::size_t>();
    const std::size_t per_calib = std::max<std::size_t>(1, samples / n_calib);
    std::vector<double> ours_stats;
    ours_stats.reserve(n_calib * per_calib);
    for (std::size_t c = 0; c < n_calib; ++c) {
      CalibrationResult calib = calibrate_by_observation(
          a, krylov_proj_builder(KrylovVariant::cg_like),
          [n](Rng& r) {
            Vec x(n);
            for (double& cc : x) cc = r.gaussian();
            return x;
          },
          m, resolved["observations"].get<std::size_t>(), prior, StatisticKind::S, rng,
          ErrorProjectionMode::cg_trace);
      Vec ours = s_statistic_samples(calib, n - m, per_calib, rng);
      ours_stats.insert(ours_stats.end(), ours.begin(), ours.end());
    }

    csv.row({std::to_string(m), format_double(exact),
             format_double(quantile(reid_stats, 0.05)),
             format_double(quantile(reid_stats, 0.95)),
             format_double(quantile(ours_stats, 0.05)),
             format_double(quantile(ours_stats, 0.95))});
  }
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_pde(const GlobalOptions& g) {
  json cfg = load_config(g);
  json resolved;
  resolved["master_seed"] = master_seed(cfg);
  resolved["L"] = cfg.value("L", 6);
  resolved["m_list"] = cfg.value("m_list", std::vector<std::size_t>{20, 30, 50});
  resolved["samples"] = cfg.value("samples", 30);
  resolved["observations"] = cfg.value("observations", 1);
  resolved["r_lo"] = cfg.value("r_lo", 0.05);
  resolved["r_hi"] = cfg.value("r_hi", 0.65);
  resolved["r_points"] = cfg.value("r_points", 64);
  resolved["t_target"] = cfg.value("t_target", 0.5);

  const std::size_t level = resolved["L"].get<std::size_t>();
  if (level > 7) throw InvalidArgumentError("pde: L must be <= 7");
  FemProblem problem = fem_assemble(level);
  problem.target_temperature = resolved["t_target"].get<double>();
  Vec r_grid(resolved["r_points"].get<std::size_t>());
  {
    const double lo = resolved["r_lo"].get<double>();
    const double hi = resolved["r_hi"].get<double>();
    for (std::size_t i = 0; i < r_grid.size(); ++i)
      r_grid[i] = lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(r_grid.size() - 1);
  }

  fs::path dir = make_run_dir(g, "pde");
  write_metadata(dir, "pde", resolved);
  for (std::size_t m : resolved["m_list"].get<std::vector<std::size_t>>()) {
    PdeBandOptions options;
    options.samples = resolved["samples"].get<std::size_t>();
    options.observations = resolved["observations"].get<std::size_t>();
    options.seed = master_seed(cfg) + m;  // independent stream per curve
    options.threads = g.threads;
    LossCurve curve = pde_uncertainty_band(problem, r_grid, m, options);
    write_loss_curve_csv(dir / ("loss_m" + std::to_string(m) + ".csv"), curve);
  }
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_gen_spd(const GlobalOptions& g) {
  json cfg = load_config(g);
  json resolved;
  resolved["master_seed"] = master_seed(cfg);
  resolved["n"] = cfg.value("n", 100);
  resolved["scale"] = cfg.value("scale", 10.0);

  SpdEnsembleSpec spec;
  spec.n = resolved["n"].get<std::size_t>();
  spec.scale = resolved["scale"].get<double>();
  spec.seed = master_seed(cfg);
  Rng rng(spec.seed);
  MatrixHandle a = random_spd(spec, rng);

  fs::path dir = make_run_dir(g, "gen-spd");
  write_metadata(dir, "gen-spd", resolved);
  write_matrix_market((dir / "matrix.mtx").string(), a);
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_calibrate(const GlobalOptions& g) {
  json cfg = load_config(g);
  json resolved;
  resolved["master_seed"] = master_seed(cfg);
  resolved["matrix"] = cfg.value("matrix", json{{"n", 100}, {"scale", 10.0}});
  resolved["m"] = cfg.value("m", 20);
  resolved["method"] = cfg.value("method", std::string("observation"));
  resolved["statistic"] = cfg.value("statistic", std::string("Z"));
  resolved["variant"] = cfg.value("variant", std::string("cg_like"));
  resolved["observations"] = cfg.value("observations", 1);
  resolved["alpha"] = cfg.value("alpha", 0.0);
  resolved["beta"] = cfg.value("beta", 0.0);

  const std::uint64_t seed = master_seed(cfg);
  MatrixHandle a = load_problem_matrix(resolved["matrix"], seed);
  const std::size_t n = a.rows();
  const std::size_t m = resolved["m"].get<std::size_t>();
  const ScalePosterior prior(resolved["alpha"].get<double>(), resolved["beta"].get<double>());
  const KrylovVariant variant = parse_variant(resolved["variant"].get<std::string>());
  Rng rng = Rng::child(seed, 1);

  CalibrationResult result;
  if (resolved["method"].get<std::string>() == "cheap") {
    Vec xstar(n);
    for (double& c : xstar) c = rng.gaussian();
    Vec b = a.apply(xstar);
    ProjectionPair pair = krylov_pair(a, b, m, variant);
    result = calibrate_cheap(a, b, Vec(n, 0.0), pair, prior);
  } else {
    const StatisticKind stat = resolved["statistic"].get<std::string>() == "S"
                                   ? StatisticKind::S
                                   : StatisticKind::Z;
    result = calibrate_by_observation(
        a, krylov_proj_builder(variant),
        [n](Rng& r) {
          Vec x(n);
          for (double& c : x) c = r.gaussian();
          return x;
        },
        m, resolved["observations"].get<std::size_t>(), prior, stat, rng);
  }

  fs::path dir = make_run_dir(g, "calibrate");
  write_metadata(dir, "calibrate", resolved);
  std::ofstream out(dir / "calibration.json");
  out << calibration_to_json(result);
  std::cout << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic projection methods: experiment runner"};
  app.require_subcommand(1);

  GlobalOptions g;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", g.config_path, "JSON configuration file");
    sub->add_option("--seed", g.seed, "master seed (overrides config)");
    sub->add_option("--out", g.out_dir, "output directory (PROJUQ_OUT overrides)");
    sub->add_option("--threads", g.threads, "worker thread cap")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* assess = app.add_subcommand("assess", "ensemble statistic assessment");
  add_common(assess);
  CLI::App* sstat = app.add_subcommand("sstat", "A-norm error statistic comparison");
  add_common(sstat);
  CLI::App* pde = app.add_subcommand("pde", "heat-source loss uncertainty bands");
  add_common(pde);
  CLI::App* gen = app.add_subcommand("gen-spd", "draw one SPD test matrix");
  add_common(gen);
  CLI::App* calibrate = app.add_subcommand("calibrate", "scale calibration for a matrix");
  add_common(calibrate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (assess->parsed()) return cmd_assess(g);
    if (sstat->parsed()) return cmd_sstat(g);
    if (pde->parsed()) return cmd_pde(g);
    if (gen->parsed()) return cmd_gen_spd(g);
    if (calibrate->parsed()) return cmd_calibrate(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

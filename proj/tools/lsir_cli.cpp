// lsir: run refinement grids and single traces, evaluate convergence
// predicates, and write or inspect problem files.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lsir/harness.hpp"

namespace fs = std::filesystem;
using namespace lsir;

namespace {

struct CommonOpts {
  std::size_t m = 1000;
  std::size_t n = 10;
  std::vector<std::string> precisions;
  std::vector<std::string> strategies;
  std::string solver = "direct";
  std::string alpha = "unit";
  std::uint64_t seed = 1;
  int max_iters = 30;
  std::string out = ".";
  bool plot = false;
};

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--m", o.m, "rows of A");
  app->add_option("--n", o.n, "columns of A");
  app->add_option("--precisions", o.precisions, "precision pairs 'residual,working', e.g. double,single");
  app->add_option("--strategy", o.strategies, "ls, semi_normal, augmented, combined")->delimiter(',');
  app->add_option("--solver", o.solver, "direct or iterative");
  app->add_option("--alpha", o.alpha, "augmented scaling: unit, optimal or a positive number");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--max-iters", o.max_iters, "refinement iteration budget");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--plot", o.plot, "also write gnuplot scripts");
  app->fallthrough();  // lets --config follow the subcommand name
}

AlphaSetting parse_alpha(const std::string& s) {
  if (s == "unit") return {AlphaMode::Unit, 1.0};
  if (s == "optimal") return {AlphaMode::Optimal, 0.0};
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !(v > 0.0))
    throw ConfigError("--alpha must be unit, optimal or a positive number, got '" + s + "'");
  return {AlphaMode::Given, v};
}

std::vector<PrecisionPair> parse_pairs(const std::vector<std::string>& v, std::vector<PrecisionPair> dflt) {
  if (v.empty()) return dflt;
  std::vector<PrecisionPair> out;
  for (const auto& s : v) out.push_back(PrecisionPair::parse(s));
  return out;
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& v, SolverKind solver) {
  if (v.empty()) {
    if (solver == SolverKind::Krylov) return {Strategy::LeastSquares, Strategy::Augmented, Strategy::Combined};
    return {Strategy::LeastSquares, Strategy::SemiNormal, Strategy::Augmented};
  }
  std::vector<Strategy> out;
  for (const auto& s : v) out.push_back(parse_strategy(s));
  return out;
}

RefinerConfig refiner_from(const CommonOpts& o) {
  RefinerConfig c;
  c.max_iters = o.max_iters;
  c.alpha = parse_alpha(o.alpha);
  c.solver = parse_solver(o.solver);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-precision least-squares iterative refinement experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key = value file with one [grid], [trace], [predict] or [problem.gen] section; "
                 "command-line flags take precedence");

  CommonOpts grid_o;
  std::vector<double> grid_kappa, grid_rnorm;
  auto* grid = app.add_subcommand("grid", "run every strategy over a kappa x rnorm grid and write CSVs");
  add_common(grid, grid_o);
  grid->add_option("--kappa", grid_kappa, "condition numbers")->delimiter(',');
  grid->add_option("--rnorm", grid_rnorm, "residual norms")->delimiter(',');

  CommonOpts trace_o;
  double trace_kappa = 1e2, trace_rnorm = 1e-7;
  std::string trace_problem;
  auto* trace = app.add_subcommand("trace", "per-iteration errors of one problem, one CSV per strategy");
  add_common(trace, trace_o);
  trace->add_option("--kappa", trace_kappa, "condition number");
  trace->add_option("--rnorm", trace_rnorm, "residual norm");
  trace->add_option("--problem", trace_problem, "load the problem from a container file instead");

  CommonOpts pred_o;
  double pred_kappa = 1e2, pred_rnorm = 1e-7;
  auto* predict = app.add_subcommand("predict", "evaluate the convergence conditions for one problem");
  add_common(predict, pred_o);
  predict->add_option("--kappa", pred_kappa, "condition number");
  predict->add_option("--rnorm", pred_rnorm, "residual norm");

  auto* problem = app.add_subcommand("problem", "write or inspect problem container files");
  problem->require_subcommand(1);
  problem->fallthrough();
  std::size_t gen_m = 1000, gen_n = 10;
  double gen_kappa = 1e2, gen_rnorm = 1e-7;
  std::uint64_t gen_seed = 1;
  std::string gen_residual = "double", gen_out = "problem.lsir";
  auto* gen = problem->add_subcommand("gen", "generate a problem and save it");
  gen->add_option("--m", gen_m, "rows");
  gen->add_option("--n", gen_n, "columns");
  gen->add_option("--kappa", gen_kappa, "condition number");
  gen->add_option("--rnorm", gen_rnorm, "residual norm");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--residual", gen_residual, "format b is rounded to: double or dword");
  gen->add_option("--out", gen_out, "output file");
  gen->fallthrough();
  std::string dump_in;
  std::size_t dump_rows = 20;
  auto* dump = problem->add_subcommand("dump", "print a container as text");
  dump->add_option("file", dump_in, "container file")->required();
  dump->add_option("--rows", dump_rows, "rows to print per array");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*grid) {
      ExperimentSpec spec;
      spec.m = grid_o.m;
      spec.n = grid_o.n;
      if (!grid_kappa.empty()) spec.kappa_list = grid_kappa;
      if (!grid_rnorm.empty()) spec.rnorm_list = grid_rnorm;
      spec.refiner = refiner_from(grid_o);
      spec.solver = spec.refiner.solver;
      spec.precision_pairs = parse_pairs(grid_o.precisions, spec.precision_pairs);
      spec.strategies = parse_strategies(grid_o.strategies, spec.solver);
      spec.base_seed = grid_o.seed;
      spec.output_dir = grid_o.out;
      const auto result = run_grid(spec);
      const auto files = emit_grid(result, spec, spec.output_dir);
      for (const auto& f : files) {
        std::cout << f.string() << '\n';
        if (grid_o.plot) {
          auto script = f;
          script.replace_extension(".gp");
          emit_gnuplot_grid(f, spec.strategies, script);
          std::cout << script.string() << '\n';
        }
      }
      return 0;
    }

    if (*trace) {
      const auto cfg = refiner_from(trace_o);
      const auto pairs = parse_pairs(trace_o.precisions, {{Format::binary32, Format::binary64}});
      const auto strategies = parse_strategies(trace_o.strategies, cfg.solver);
      fs::create_directories(trace_o.out);
      std::vector<fs::path> written;
      for (const auto& p : pairs) {
        const LsProblem prob = trace_problem.empty()
                                   ? make_problem(trace_o.m, trace_o.n, trace_kappa, trace_rnorm, trace_o.seed, p.residual)
                                   : load_problem(trace_problem);
        for (auto s : strategies) {
          const auto t = run_driver(prob, s, cfg, p);
          const auto path = fs::path(trace_o.out) /
                            ("trace_" + std::string(format_name(p.residual)) + "_" + std::string(format_name(p.working)) +
                             "_" + std::string(strategy_name(s)) + ".csv");
          emit_trace(t, path);
          written.push_back(path);
          std::cout << path.string() << " " << status_name(t.status) << " " << t.refinement_steps() << '\n';
        }
      }
      if (trace_o.plot) {
        const auto script = fs::path(trace_o.out) / "trace.gp";
        emit_gnuplot_trace(written, script);
        std::cout << script.string() << '\n';
      }
      return 0;
    }

    if (*predict) {
      const auto pairs = parse_pairs(pred_o.precisions, {{Format::binary32, Format::binary64}});
      std::cout << "pair,condition,lhs,threshold,holds\n";
      for (const auto& p : pairs) {
        const auto prob = make_problem(pred_o.m, pred_o.n, pred_kappa, pred_rnorm, pred_o.seed, p.residual);
        const auto rep = condition_report(prob, p);
        for (const auto& e : rep.entries)
          std::cout << '"' << p.label() << "\"," << e.name << ',' << format_real(e.lhs) << ','
                    << format_real(e.threshold) << ',' << (e.holds ? 1 : 0) << '\n';
      }
      std::cout << "\nstrategy,flops_residual,flops_working,needs_Az,needs_ATz\n";
      for (auto s : {Strategy::LeastSquares, Strategy::SemiNormal, Strategy::Augmented}) {
        const auto c = cost_model(static_cast<std::int64_t>(pred_o.m), static_cast<std::int64_t>(pred_o.n), s);
        std::cout << strategy_name(s) << ',' << c.flops_residual_precision << ',' << c.flops_working_precision << ','
                  << c.needs_Az << ',' << c.needs_ATz << '\n';
      }
      return 0;
    }

    if (*gen) {
      const auto prob = make_problem(gen_m, gen_n, gen_kappa, gen_rnorm, gen_seed, parse_format(gen_residual));
      save_problem(prob, gen_out);
      std::cout << gen_out << '\n';
      return 0;
    }
    if (*dump) {
      dump_problem(load_problem(dump_in), std::cout, dump_rows);
      return 0;
    }
  } catch (const lsir::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const lsir::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

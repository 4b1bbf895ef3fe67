#pragma once

// Experiment grids over (condition number x residual norm), CSV output, and
// the binary problem container.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lsir/predict.hpp"
#include "lsir/probgen.hpp"
#include "lsir/refine.hpp"

namespace lsir {

struct ExperimentSpec {
  std::size_t m = 1000;
  std::size_t n = 10;
  std::vector<double> kappa_list{1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
  std::vector<double> rnorm_list{1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  std::vector<PrecisionPair> precision_pairs{{Format::binary32, Format::binary64},
                                             {Format::binary64, Format::dword}};
  std::vector<Strategy> strategies{Strategy::LeastSquares, Strategy::SemiNormal, Strategy::Augmented};
  SolverKind solver = SolverKind::DirectQR;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir = ".";
  RefinerConfig refiner;  // solver field is overridden by `solver`
  unsigned workers = 0;   // 0: LSIR_WORKERS or hardware concurrency

  void validate() const;
};

struct CellRecord {
  double kappa = 0.0;
  double rnorm = 0.0;
  Strategy strategy = Strategy::LeastSquares;
  SolverKind solver = SolverKind::DirectQR;
  PrecisionPair precisions;
  Status status = Status::MaxIterations;
  int iters = 0;
  double x_relerr = 0.0;
  double r_relerr = 0.0;
  int inner_iters = 0;
  ConditionReport report;
  std::string message;
};

struct GridResult {
  std::vector<CellRecord> records;  // sorted by (pair, kappa, rnorm, strategy)

  std::vector<CellRecord> for_pair(PrecisionPair p) const;
};

/// Seed of grid cell (kappa index, rnorm index).
std::uint64_t cell_seed(std::uint64_t base, std::size_t kappa_index, std::size_t rnorm_index);

/// Every (pair, cell, strategy) combination. Cells run on a thread pool;
/// the result does not depend on the worker count.
GridResult run_grid(const ExperimentSpec& spec);

/// Worker count from LSIR_WORKERS, else hardware concurrency.
unsigned default_workers();

/// Shortest decimal form that reads back to the same double; "inf", "-inf", "nan".
std::string format_real(double v);

inline constexpr const char* kGridHeader =
    "kappa,rnorm,strategy,solver,u,ur,status,iters,x_relerr,r_relerr,inner_iters,"
    "pred_ls,pred_sn_conv,pred_sn_lim,pred_aug_x,pred_aug_r";
inline constexpr const char* kTraceHeader = "iter,x_relerr,r_relerr,dx_norm,inner_iters";

void write_csv(const std::vector<CellRecord>& records, std::ostream& out);
void emit_csv(const std::vector<CellRecord>& records, const std::filesystem::path& path);
/// One CSV per precision pair in `dir`; returns the files written.
std::vector<std::filesystem::path> emit_grid(const GridResult& result, const ExperimentSpec& spec,
                                             const std::filesystem::path& dir);
std::string grid_file_name(PrecisionPair p, SolverKind s);

void write_trace(const RefinementTrace& trace, std::ostream& out);
void emit_trace(const RefinementTrace& trace, const std::filesystem::path& path);

/// gnuplot script drawing an iteration-count heat map per strategy from a grid CSV.
void emit_gnuplot_grid(const std::filesystem::path& csv, const std::vector<Strategy>& strategies,
                       const std::filesystem::path& script);
/// gnuplot script plotting x and r errors against iteration from trace CSVs.
void emit_gnuplot_trace(const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& script);

// Problem container, little-endian:
//   "LSIRPRB\0" | u32 version (1) | u64 m | u64 n | u8 residual format tag
//   | f64 kappa | f64 rnorm | u64 seed
//   | A: m*n f64, row-major | b: m x (f64 hi, f64 lo) | x*: n x (hi, lo) | r*: m x (hi, lo)
inline constexpr std::uint32_t kContainerVersion = 1;
void save_problem(const LsProblem& p, const std::filesystem::path& path);
LsProblem load_problem(const std::filesystem::path& path);
void write_problem(const LsProblem& p, std::ostream& out);
LsProblem read_problem(std::istream& in);
/// Human-readable listing; entries beyond `max_rows` rows are elided.
void dump_problem(const LsProblem& p, std::ostream& out, std::size_t max_rows = 20);

}  // namespace lsir

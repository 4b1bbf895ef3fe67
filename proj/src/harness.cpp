#include "lsir/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace lsir {

void ExperimentSpec::validate() const {
  if (n < 1 || m < n) throw ConfigError("grid needs m >= n >= 1");
  if (kappa_list.empty() || rnorm_list.empty() || precision_pairs.empty() || strategies.empty())
    throw ConfigError("grid lists must be nonempty");
  for (double k : kappa_list)
    if (!(k >= 1.0)) throw ConfigError("kappa values must be >= 1");
  for (double r : rnorm_list) {
    if (!(r >= 0.0)) throw ConfigError("rnorm values must be >= 0");
    if (m == n && r > 0.0) throw ConfigError("square problems need rnorm = 0");
  }
  for (const auto& p : precision_pairs) {
    if (!p.valid()) throw ConfigError("invalid precision pair " + p.label());
    for (auto s : strategies)
      if (s != Strategy::Combined && !p.squared_residual())
        throw ConfigError(std::string(strategy_name(s)) + " needs u_r <= u^2, got " + p.label());
  }
  if (solver == SolverKind::Krylov)
    for (auto s : strategies)
      if (s == Strategy::SemiNormal) throw ConfigError("semi_normal has no iterative variant");
  refiner.validate();
}

std::vector<CellRecord> GridResult::for_pair(PrecisionPair p) const {
  std::vector<CellRecord> out;
  for (const auto& r : records)
    if (r.precisions == p) out.push_back(r);
  return out;
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t kappa_index, std::size_t rnorm_index) {
  return derive_seed(base, kappa_index, rnorm_index);
}

unsigned default_workers() {
  if (const char* env = std::getenv("LSIR_WORKERS")) {
    unsigned v = 0;
    const auto end = env + std::strlen(env);
    const auto res = std::from_chars(env, end, v);
    if (res.ec == std::errc{} && res.ptr == end && v > 0) return v;
    throw ConfigError("LSIR_WORKERS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct CellTask {
  std::size_t pair_index, ki, ri;
};

std::vector<CellRecord> run_cell(const ExperimentSpec& spec, const CellTask& t) {
  const auto pair = spec.precision_pairs[t.pair_index];
  const double kappa = spec.kappa_list[t.ki];
  const double rnorm = spec.rnorm_list[t.ri];
  std::vector<CellRecord> out;

  auto failed = [&](const std::string& msg) {
    for (auto s : spec.strategies) {
      CellRecord rec;
      rec.kappa = kappa;
      rec.rnorm = rnorm;
      rec.strategy = s;
      rec.solver = spec.solver;
      rec.precisions = pair;
      rec.status = Status::SolverFailure;
      rec.x_relerr = rec.r_relerr = std::numeric_limits<double>::infinity();
      rec.report = condition_report(kappa, 1.0, rnorm, 1.0, pair);
      rec.message = msg;
      out.push_back(rec);
    }
    return out;
  };

  LsProblem prob;
  try {
    prob = make_problem(spec.m, spec.n, kappa, rnorm, cell_seed(spec.base_seed, t.ki, t.ri), pair.residual);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    return failed(e.what());
  }
  const auto report = condition_report(prob, pair);

  RefinerConfig cfg = spec.refiner;
  cfg.solver = spec.solver;
  for (auto s : spec.strategies) {
    CellRecord rec;
    rec.kappa = kappa;
    rec.rnorm = rnorm;
    rec.strategy = s;
    rec.solver = spec.solver;
    rec.precisions = pair;
    rec.report = report;
    const auto trace = run_driver(prob, s, cfg, pair);
    rec.status = trace.status;
    rec.message = trace.message;
    if (trace.iterations.empty()) {
      rec.x_relerr = rec.r_relerr = std::numeric_limits<double>::infinity();
    } else {
      rec.iters = trace.refinement_steps();
      rec.x_relerr = trace.last().x_relerr;
      rec.r_relerr = trace.last().r_relerr;
      rec.inner_iters = trace.total_inner_iters();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

GridResult run_grid(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<CellTask> tasks;
  for (std::size_t p = 0; p < spec.precision_pairs.size(); ++p)
    for (std::size_t i = 0; i < spec.kappa_list.size(); ++i)
      for (std::size_t j = 0; j < spec.rnorm_list.size(); ++j) tasks.push_back({p, i, j});

  std::vector<std::vector<CellRecord>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        slots[k] = run_cell(spec, tasks[k]);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const unsigned nw = std::min<std::size_t>(spec.workers ? spec.workers : default_workers(), tasks.size());
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  GridResult res;
  for (auto& s : slots)
    for (auto& r : s) res.records.push_back(std::move(r));
  auto pair_index = [&](const PrecisionPair& p) {
    return std::find(spec.precision_pairs.begin(), spec.precision_pairs.end(), p) - spec.precision_pairs.begin();
  };
  std::stable_sort(res.records.begin(), res.records.end(), [&](const CellRecord& a, const CellRecord& b) {
    return std::make_tuple(pair_index(a.precisions), a.kappa, a.rnorm, static_cast<int>(a.strategy)) <
           std::make_tuple(pair_index(b.precisions), b.kappa, b.rnorm, static_cast<int>(b.strategy));
  });
  return res;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_csv(const std::vector<CellRecord>& records, std::ostream& out) {
  out << kGridHeader << '\n';
  for (const auto& r : records) {
    auto flag = [&](std::string_view name) { return r.report.at(name).holds ? '1' : '0'; };
    out << format_real(r.kappa) << ',' << format_real(r.rnorm) << ',' << strategy_name(r.strategy) << ','
        << solver_name(r.solver) << ',' << format_real(r.precisions.u()) << ',' << format_real(r.precisions.u_r())
        << ',' << status_name(r.status) << ',' << r.iters << ',' << format_real(r.x_relerr) << ','
        << format_real(r.r_relerr) << ',' << r.inner_iters << ',' << flag("ls_recognition") << ','
        << flag("sn_convergence") << ',' << flag("sn_limiting") << ',' << flag("aug_x") << ',' << flag("aug_r")
        << '\n';
  }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode | std::ios::out | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

void finish(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void emit_csv(const std::vector<CellRecord>& records, const std::filesystem::path& path) {
  auto f = open_out(path);
  write_csv(records, f);
  finish(f, path);
}

std::string grid_file_name(PrecisionPair p, SolverKind s) {
  return "grid_" + std::string(format_name(p.residual)) + "_" + std::string(format_name(p.working)) + "_" +
         std::string(solver_name(s)) + ".csv";
}

std::vector<std::filesystem::path> emit_grid(const GridResult& result, const ExperimentSpec& spec,
                                             const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> files;
  for (const auto& p : spec.precision_pairs) {
    const auto path = dir / grid_file_name(p, spec.solver);
    emit_csv(result.for_pair(p), path);
    files.push_back(path);
  }
  return files;
}

void write_trace(const RefinementTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& it : trace.iterations)
    out << it.iter << ',' << format_real(it.x_relerr) << ',' << format_real(it.r_relerr) << ','
        << format_real(it.dx_norm) << ',' << it.inner_iters << '\n';
}

void emit_trace(const RefinementTrace& trace, const std::filesystem::path& path) {
  auto f = open_out(path);
  write_trace(trace, f);
  finish(f, path);
}

void emit_gnuplot_grid(const std::filesystem::path& csv, const std::vector<Strategy>& strategies,
                       const std::filesystem::path& script) {
  auto f = open_out(script);
  f << "# iteration counts per (kappa, rnorm); columns: 1 kappa, 2 rnorm, 3 strategy, 8 iters\n"
    << "set datafile separator ','\n"
    << "set logscale xy\n"
    << "set xlabel 'kappa'\nset ylabel 'rnorm'\n"
    << "set cbrange [0:30]\n"
    << "set terminal pngcairo size 800,600\n";
  for (auto s : strategies) {
    const auto name = std::string(strategy_name(s));
    f << "set output '" << csv.stem().string() << "_" << name << ".png'\n"
      << "set title '" << name << "'\n"
      << "plot '" << csv.filename().string() << "' every ::1 using 1:2:(strcol(3) eq '" << name
      << "' ? (strcol(7) eq 'converged' ? $8 : 30) : NaN) with points pt 5 ps 3 palette notitle\n";
  }
  finish(f, script);
}

void emit_gnuplot_trace(const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& script) {
  auto f = open_out(script);
  f << "set datafile separator ','\n"
    << "set logscale y\n"
    << "set xlabel 'iteration'\n"
    << "set terminal pngcairo size 800,600\n";
  for (int col : {2, 3}) {
    f << "set output '" << script.stem().string() << (col == 2 ? "_x" : "_r") << ".png'\n"
      << "set ylabel '" << (col == 2 ? "relative error in x" : "relative error in r") << "'\n"
      << "plot ";
    for (std::size_t i = 0; i < csvs.size(); ++i) {
      if (i) f << ", ";
      f << "'" << csvs[i].filename().string() << "' every ::1 using 1:" << col << " with linespoints title '"
        << csvs[i].stem().string() << "'";
    }
    f << '\n';
  }
  finish(f, script);
}

// ---- problem container ----

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'S', 'I', 'R', 'P', 'R', 'B', '\0'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}
void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 4);
}
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_dword(std::ostream& out, const dword& v) {
  put_f64(out, v.hi());
  put_f64(out, v.lo());
}

template <std::size_t N>
std::array<unsigned char, N> get_bytes(std::istream& in) {
  std::array<unsigned char, N> b{};
  in.read(reinterpret_cast<char*>(b.data()), N);
  if (in.gcount() != static_cast<std::streamsize>(N)) throw IoError("problem container truncated");
  return b;
}
std::uint64_t get_u64(std::istream& in) {
  const auto b = get_bytes<8>(in);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
std::uint32_t get_u32(std::istream& in) {
  const auto b = get_bytes<4>(in);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }
dword get_dword(std::istream& in) {
  const double hi = get_f64(in);
  const double lo = get_f64(in);
  return dword::from_parts(hi, lo);
}

}  // namespace

void write_problem(const LsProblem& p, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kContainerVersion);
  put_u64(out, p.m());
  put_u64(out, p.n());
  out.put(static_cast<char>(p.residual));
  put_f64(out, p.kappa_target);
  put_f64(out, p.rnorm_target);
  put_u64(out, p.seed);
  for (std::size_t i = 0; i < p.m(); ++i)
    for (std::size_t j = 0; j < p.n(); ++j) put_f64(out, p.A(i, j));
  for (const auto& v : p.b) put_dword(out, v);
  for (const auto& v : p.x_star) put_dword(out, v);
  for (const auto& v : p.r_star) put_dword(out, v);
}

LsProblem read_problem(std::istream& in) {
  const auto magic = get_bytes<8>(in);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin(),
                  [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); }))
    throw IoError("not a problem container (bad magic)");
  const auto version = get_u32(in);
  if (version != kContainerVersion) throw IoError("unsupported container version " + std::to_string(version));
  const auto m = get_u64(in);
  const auto n = get_u64(in);
  const auto tag = get_bytes<1>(in)[0];
  if (tag < 1 || tag > 3) throw IoError("bad precision tag in problem container");
  if (n == 0 || m < n || m > (std::uint64_t{1} << 32) || n > (std::uint64_t{1} << 20))
    throw IoError("bad dimensions in problem container");
  LsProblem p;
  p.residual = static_cast<Format>(tag);
  p.kappa_target = get_f64(in);
  p.rnorm_target = get_f64(in);
  p.seed = get_u64(in);
  p.A = Matrix<double>(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p.A(i, j) = get_f64(in);
  p.b.resize(m);
  for (auto& v : p.b) v = get_dword(in);
  p.x_star.resize(n);
  for (auto& v : p.x_star) v = get_dword(in);
  p.r_star.resize(m);
  for (auto& v : p.r_star) v = get_dword(in);
  return p;
}

void save_problem(const LsProblem& p, const std::filesystem::path& path) {
  auto f = open_out(path, std::ios::binary);
  write_problem(p, f);
  finish(f, path);
}

LsProblem load_problem(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_problem(f);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void dump_problem(const LsProblem& p, std::ostream& out, std::size_t max_rows) {
  out << "version " << kContainerVersion << '\n'
      << "m " << p.m() << '\n'
      << "n " << p.n() << '\n'
      << "residual " << format_name(p.residual) << '\n'
      << "kappa " << format_real(p.kappa_target) << '\n'
      << "rnorm " << format_real(p.rnorm_target) << '\n'
      << "seed " << p.seed << '\n';
  const std::size_t rows = std::min(p.m(), max_rows);
  out << "A (row-major)\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p.n(); ++j) out << (j ? " " : "") << format_real(p.A(i, j));
    out << '\n';
  }
  if (rows < p.m()) out << "... " << p.m() - rows << " more rows\n";
  auto vec = [&](const char* name, const Vector<dword>& v) {
    out << name << " (hi lo)\n";
    const std::size_t k = std::min(v.size(), max_rows);
    for (std::size_t i = 0; i < k; ++i) out << format_real(v[i].hi()) << ' ' << format_real(v[i].lo()) << '\n';
    if (k < v.size()) out << "... " << v.size() - k << " more entries\n";
  };
  vec("b", p.b);
  vec("x_star", p.x_star);
  vec("r_star", p.r_star);
}

}  // namespace lsir

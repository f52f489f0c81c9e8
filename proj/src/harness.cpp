#include "hamkrylov/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hamkrylov::harness {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

long long elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

double relative_error(const VectorXd& reference, const VectorXd& approx) {
  return (reference - approx).norm() / reference.norm();
}

std::ofstream open_output(const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// Cache layout: 8-byte magic, dimension, phi_expl flag, then the four vectors
// as raw little-endian doubles (b, exp_b, phi_impl, phi_expl).
constexpr std::array<char, 8> kCacheMagic = {'H', 'K', 'R', 'E', 'F', '0', '0', '1'};

fs::path cache_path(const RunConfig& cfg, ProblemId id) {
  std::uint64_t h_bits = 0;
  static_assert(sizeof(h_bits) == sizeof(cfg.h));
  std::memcpy(&h_bits, &cfg.h, sizeof(h_bits));
  char name[96];
  std::snprintf(name, sizeof(name), "%s_h%016llx_seed%llu.bin", std::string(to_string(id)).c_str(),
                static_cast<unsigned long long>(h_bits), static_cast<unsigned long long>(cfg.seed));
  return cfg.output_dir / "reference_cache" / name;
}

void write_vector(std::ostream& out, const VectorXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

bool read_vector(std::istream& in, VectorXd& v, Index dim) {
  v.resize(dim);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  return static_cast<bool>(in);
}

std::optional<Reference> load_reference(const fs::path& path, const VectorXd& b) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  std::uint64_t dim = 0;
  std::uint64_t has_expl = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  in.read(reinterpret_cast<char*>(&has_expl), sizeof(has_expl));
  if (!in || magic != kCacheMagic || static_cast<Index>(dim) != b.size()) return std::nullopt;
  Reference ref;
  const auto m = static_cast<Index>(dim);
  if (!read_vector(in, ref.b, m) || !read_vector(in, ref.exp_b, m) || !read_vector(in, ref.phi_impl, m))
    return std::nullopt;
  if (has_expl != 0 && !read_vector(in, ref.phi_expl, m)) return std::nullopt;
  // A stale file from a different generator must not be trusted.
  if (std::memcmp(ref.b.data(), b.data(), static_cast<std::size_t>(m) * sizeof(double)) != 0) return std::nullopt;
  return ref;
}

void store_reference(const fs::path& path, const Reference& ref) {
  std::ofstream out = open_output(path);
  const std::uint64_t dim = static_cast<std::uint64_t>(ref.b.size());
  const std::uint64_t has_expl = ref.phi_expl.size() > 0 ? 1 : 0;
  out.write(kCacheMagic.data(), kCacheMagic.size());
  out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  out.write(reinterpret_cast<const char*>(&has_expl), sizeof(has_expl));
  write_vector(out, ref.b);
  write_vector(out, ref.exp_b);
  write_vector(out, ref.phi_impl);
  if (has_expl) write_vector(out, ref.phi_expl);
  finish(out, path);
}

Reference compute_reference(const ProblemInstance<double>& problem, const VectorXd& b, double h) {
  const MatrixXd a = h * problem.H.dense();
  const Index m = a.rows();
  Reference ref;
  ref.b = b;
  const MatrixXd e = expm(a);
  ref.exp_b = e * b;
  ref.phi_impl = augmented_exponential(a, b).topRightCorner(m, 1);
  try {
    const VectorXd x = solve_linear(a, b);
    ref.phi_expl = e * x - x;
  } catch (const SingularMatrixError&) {
    ref.phi_expl.resize(0);
  }
  return ref;
}

const VectorXd& reference_vector(const Reference& ref, FunctionId f) {
  return f == FunctionId::kExp ? ref.exp_b : ref.phi_impl;
}

}  // namespace

fs::path default_output_dir() {
  if (const char* env = std::getenv("HAMKRYLOV_OUT"); env != nullptr && *env != '\0') return fs::path(env);
  return fs::path("results");
}

std::vector<Index> even_r_values(Index r_max) {
  std::vector<Index> r;
  for (Index v = 2; v <= r_max; v += 2) r.push_back(v);
  return r;
}

Reference reference_for(const ProblemInstance<double>& problem, const RunConfig& cfg) {
  const VectorXd b = random_b<double>(problem.H.dim(), cfg.seed);
  const fs::path path = cache_path(cfg, problem.id);
  if (cfg.cache_references)
    if (auto cached = load_reference(path, b)) return *cached;
  Reference ref = compute_reference(problem, b, cfg.h);
  if (cfg.cache_references) store_reference(path, ref);
  return ref;
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_record(std::ostream& out, const ConvergenceRecord& rec) {
  out << to_string(rec.problem) << ',' << to_string(rec.method) << ','
      << (rec.function ? std::string(to_string(*rec.function)) : std::string("none")) << ',' << rec.r << ','
      << rec.basis_dim << ',' << format_real(rec.rel_error) << ',' << rec.wall_time_ns << ',' << rec.matvecs << ','
      << rec.solves << ',' << rec.inner_products << '\n';
}

std::vector<ConvergenceRecord> run_convergence(const RunConfig& cfg) {
  std::vector<ConvergenceRecord> records;
  for (ProblemId pid : cfg.problems) {
    const ProblemInstance<double> problem = build_problem<double>(pid);
    const Reference ref = reference_for(problem, cfg);
    std::cerr << "convergence: " << to_string(pid) << '\n';
    for (MethodId method : cfg.methods) {
      for (Index r : cfg.r_values) {
        const auto start = Clock::now();
        KrylovDecomposition<double> d;
        try {
          d = build_decomposition(method, problem.H, ref.b, r, cfg.options);
        } catch (const SingularMatrixError& e) {
          std::cerr << "  skipping " << to_string(method) << " on " << to_string(pid) << ": " << e.what() << '\n';
          break;
        }
        const long long build_ns = elapsed_ns(start);
        for (FunctionId f : cfg.functions) {
          const auto f_start = Clock::now();
          double err = std::numeric_limits<double>::quiet_NaN();
          try {
            err = relative_error(reference_vector(ref, f), approximate_action(d, f, cfg.h));
          } catch (const SingularMatrixError&) {
            // phi_expl on a singular projected matrix: reported as nan
          }
          records.push_back({pid, method, f, r, d.dim(), err, build_ns + elapsed_ns(f_start), d.counts.matvecs,
                             d.counts.solves, d.counts.inner_products});
        }
      }
    }
  }

  std::map<std::pair<ProblemId, FunctionId>, std::vector<const ConvergenceRecord*>> groups;
  for (const auto& rec : records) groups[{rec.problem, *rec.function}].push_back(&rec);
  for (ProblemId pid : cfg.problems) {
    for (FunctionId f : cfg.functions) {
      const fs::path path = cfg.output_dir / ("convergence_" + std::string(to_string(pid)) + "_" +
                                              std::string(to_string(f)) + ".csv");
      std::ofstream out = open_output(path);
      write_csv_header(out);
      for (const ConvergenceRecord* rec : groups[{pid, f}]) write_record(out, *rec);
      finish(out, path);
    }
  }
  const fs::path combined = cfg.output_dir / "convergence.csv";
  std::ofstream out = open_output(combined);
  write_csv_header(out);
  for (const auto& rec : records) write_record(out, rec);
  finish(out, combined);
  return records;
}

std::vector<PhiConsistencyRow> run_phi_consistency(const RunConfig& cfg) {
  std::vector<PhiConsistencyRow> rows;
  for (ProblemId pid : cfg.problems) {
    const ProblemInstance<double> problem = build_problem<double>(pid);
    const Reference ref = reference_for(problem, cfg);
    PhiConsistencyRow row{pid, problem.n, std::numeric_limits<double>::quiet_NaN(), ref.phi_expl.size() == 0};
    if (!row.skipped) row.rel_difference = relative_error(ref.phi_impl, ref.phi_expl);
    rows.push_back(row);
  }
  const fs::path path = cfg.output_dir / "phi_consistency.csv";
  std::ofstream out = open_output(path);
  out << "problem,n,rel_difference,status\n";
  for (const auto& row : rows)
    out << to_string(row.problem) << ',' << row.n << ',' << format_real(row.rel_difference) << ','
        << (row.skipped ? "skipped" : "ok") << '\n';
  finish(out, path);
  return rows;
}

std::vector<AdaptiveRow> run_adaptive_table(const RunConfig& cfg, ProblemId pid, MethodId method, Index k_max) {
  if (method != MethodId::kA && method != MethodId::kHL)
    throw std::invalid_argument("run_adaptive_table: method must be A or HL");
  if (k_max < 1) throw std::invalid_argument("run_adaptive_table: k_max must be at least 1");
  const ProblemInstance<double> problem = build_problem<double>(pid);
  const Reference ref = reference_for(problem, cfg);
  const double b_norm = ref.b.norm();
  std::vector<AdaptiveRow> rows;

  const auto record = [&](const KrylovDecomposition<double>& d, Index k, double estimate) {
    const VectorXd approx = approximate_action(d, FunctionId::kExp, cfg.h);
    rows.push_back({k, d.dim(), (ref.exp_b - approx).norm(), estimate});
  };
  if (method == MethodId::kA) {
    ArnoldiProcess<double> process(problem.H, ref.b, cfg.options);
    for (Index k = 1; k <= k_max; ++k) {
      while (process.steps() < 2 * k && process.step()) {
      }
      const auto d = process.decomposition();
      record(d, k, error_estimate_arnoldi(d, cfg.h, b_norm));
      if (process.stopped()) break;
    }
  } else {
    HamiltonianLanczosProcess<double> process(problem.H, ref.b, cfg.options);
    for (Index k = 1; k <= k_max; ++k) {
      process.step();
      if (process.pairs() < k) break;
      const auto d = process.decomposition();
      record(d, k, error_estimate_hl(d, cfg.h, b_norm));
      if (process.stopped()) break;
    }
  }

  const fs::path path =
      cfg.output_dir / ("adaptive_" + std::string(to_string(pid)) + "_" + std::string(to_string(method)) + ".csv");
  std::ofstream out = open_output(path);
  out << "problem,method,k,basis_dim,actual_error,estimate\n";
  for (const auto& row : rows)
    out << to_string(pid) << ',' << to_string(method) << ',' << row.k << ',' << row.basis_dim << ','
        << format_real(row.actual_error) << ',' << format_real(row.estimate) << '\n';
  finish(out, path);
  return rows;
}

std::vector<ConvergenceRecord> run_timings(const RunConfig& cfg) {
  constexpr int kRepetitions = 5;
  std::vector<ConvergenceRecord> records;
  for (ProblemId pid : cfg.problems) {
    const ProblemInstance<double> problem = build_problem<double>(pid);
    const Reference ref = reference_for(problem, cfg);
    std::cerr << "timings: " << to_string(pid) << '\n';
    for (MethodId method : cfg.methods) {
      for (Index r : cfg.r_values) {
        KrylovDecomposition<double> d;
        try {
          d = build_decomposition(method, problem.H, ref.b, r, cfg.options);  // warm-up
        } catch (const SingularMatrixError& e) {
          std::cerr << "  skipping " << to_string(method) << " on " << to_string(pid) << ": " << e.what() << '\n';
          break;
        }
        std::array<long long, kRepetitions> times{};
        for (auto& t : times) {
          const auto start = Clock::now();
          d = build_decomposition(method, problem.H, ref.b, r, cfg.options);
          t = elapsed_ns(start);
        }
        std::sort(times.begin(), times.end());
        const double err = relative_error(ref.exp_b, approximate_action(d, FunctionId::kExp, cfg.h));
        records.push_back({pid, method, FunctionId::kExp, r, d.dim(), err, times[kRepetitions / 2], d.counts.matvecs,
                           d.counts.solves, d.counts.inner_products});
      }
    }
  }
  const fs::path path = cfg.output_dir / "timings.csv";
  std::ofstream out = open_output(path);
  write_csv_header(out);
  for (const auto& rec : records) write_record(out, rec);
  finish(out, path);
  return records;
}

std::vector<fs::path> export_matrices(const RunConfig& cfg, ProblemId pid, std::optional<MethodId> method, Index r) {
  const ProblemInstance<double> problem = build_problem<double>(pid);
  std::vector<fs::path> written;
  const auto dump = [&](const fs::path& path, const auto& matrix) {
    std::ofstream out = open_output(path);
    write_matrix_market(out, matrix);
    finish(out, path);
    written.push_back(path);
  };
  const std::string stem = std::string(to_string(pid));
  dump(cfg.output_dir / (stem + "_H.mtx"), problem.H.assemble());
  if (method) {
    const VectorXd b = random_b<double>(problem.H.dim(), cfg.seed);
    const auto d = build_decomposition(*method, problem.H, b, r, cfg.options);
    const std::string tag = stem + "_" + std::string(to_string(*method)) + "_r" + std::to_string(r);
    dump(cfg.output_dir / (tag + "_S.mtx"), d.basis);
    dump(cfg.output_dir / (tag + "_Ht.mtx"), d.projected);
  }
  return written;
}

}  // namespace hamkrylov::harness

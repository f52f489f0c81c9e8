#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hamkrylov/approx.hpp"
#include "hamkrylov/krylov.hpp"
#include "hamkrylov/problems.hpp"

namespace hamkrylov::harness {

inline constexpr const char* kCsvHeader =
    "problem,method,function,r,basis_dim,rel_error,wall_time_ns,matvecs,solves,inner_products";

/// Default output directory, overridden by the HAMKRYLOV_OUT environment variable.
std::filesystem::path default_output_dir();

std::vector<Index> even_r_values(Index r_max);

struct RunConfig {
  std::vector<ProblemId> problems{kAllProblems.begin(), kAllProblems.end()};
  std::vector<MethodId> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<Index> r_values = even_r_values(50);  ///< half-dimensions r; basis dimension 2r
  double h = 0.01;
  std::uint64_t seed = 42;
  std::vector<FunctionId> functions{kAllFunctions.begin(), kAllFunctions.end()};
  std::filesystem::path output_dir = default_output_dir();
  KrylovOptions<double> options{};
  bool cache_references = true;
};

struct ConvergenceRecord {
  ProblemId problem;
  MethodId method;
  std::optional<FunctionId> function;  ///< empty for pure basis timings
  Index r = 0;
  Index basis_dim = 0;
  double rel_error = 0;
  long long wall_time_ns = 0;
  long long matvecs = 0;
  long long solves = 0;
  long long inner_products = 0;
};

/// Dense full-size results for one (problem, h, seed).
struct Reference {
  VectorXd b;
  VectorXd exp_b;     ///< expm(hH) b
  VectorXd phi_impl;  ///< top-right block of the augmented exponential
  VectorXd phi_expl;  ///< (expm(hH) - I)(hH)^{-1} b; empty when hH is singular
};

/// Computes, or loads from the cache in cfg.output_dir, the reference for a problem.
Reference reference_for(const ProblemInstance<double>& problem, const RunConfig& cfg);

void write_csv_header(std::ostream& out);
void write_record(std::ostream& out, const ConvergenceRecord& rec);
std::string format_real(double value);

/// Relative error of every (problem, method, function, r) cell against the
/// dense reference; writes convergence_<problem>_<function>.csv per pair and
/// a combined convergence.csv.
std::vector<ConvergenceRecord> run_convergence(const RunConfig& cfg);

struct PhiConsistencyRow {
  ProblemId problem;
  Index n = 0;
  double rel_difference = 0;
  bool skipped = false;
};

/// ||phi_expl(hH)b - phi_impl(hH)b|| / ||phi_impl(hH)b|| at full dimension;
/// writes phi_consistency.csv.
std::vector<PhiConsistencyRow> run_phi_consistency(const RunConfig& cfg);

struct AdaptiveRow {
  Index k = 0;
  Index basis_dim = 0;
  double actual_error = 0;
  double estimate = 0;
};

/// Actual error and first-term estimate for k = 1..k_max. For A, row k uses
/// 2k Arnoldi steps so both methods compare at equal dimension; HL uses k
/// pairs. Writes adaptive_<problem>_<method>.csv.
std::vector<AdaptiveRow> run_adaptive_table(const RunConfig& cfg, ProblemId problem, MethodId method, Index k_max);

/// Median of five timed basis constructions after a warm-up run, per
/// (problem, method, r); writes timings.csv.
std::vector<ConvergenceRecord> run_timings(const RunConfig& cfg);

/// Writes H of the problem (and, when `method` is set, S and Ht at r) as
/// Matrix Market files. Returns the written paths.
std::vector<std::filesystem::path> export_matrices(const RunConfig& cfg, ProblemId problem,
                                                   std::optional<MethodId> method, Index r);

}  // namespace hamkrylov::harness

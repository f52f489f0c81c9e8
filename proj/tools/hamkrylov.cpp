// Command-line runner for the convergence, phi-consistency, adaptive,
// timing and export experiments.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "hamkrylov/harness.hpp"

namespace hk = hamkrylov;
namespace hh = hamkrylov::harness;

namespace {

struct Options {
  std::vector<std::string> problems{"all"};
  std::vector<std::string> methods{"all"};
  std::vector<std::string> functions{"all"};
  hk::Index r_max = 50;
  hk::Index k_max = 9;
  double h = 0.01;
  std::uint64_t seed = 42;
  std::string out;
  bool no_rejorth = false;
  bool no_cache = false;
};

template <typename Id, std::size_t N, typename Parse>
std::vector<Id> parse_list(const std::vector<std::string>& names, const std::array<Id, N>& all, Parse parse,
                           const char* what) {
  std::vector<Id> ids;
  for (const auto& name : names) {
    if (name == "all") return {all.begin(), all.end()};
    const auto id = parse(name);
    if (!id) throw CLI::ValidationError(std::string("unknown ") + what + " '" + name + "'");
    ids.push_back(*id);
  }
  return ids;
}

hh::RunConfig make_config(const Options& o) {
  hh::RunConfig cfg;
  cfg.problems = parse_list(o.problems, hk::kAllProblems, hk::parse_problem, "problem");
  cfg.methods = parse_list(o.methods, hk::kAllMethods, hk::parse_method, "method");
  cfg.functions = parse_list(o.functions, hk::kAllFunctions, hk::parse_function, "function");
  cfg.r_values = hh::even_r_values(o.r_max);
  if (cfg.r_values.empty() && o.r_max >= 1) cfg.r_values = {o.r_max};
  if (o.h == 0.0) throw CLI::ValidationError("--h must be nonzero");
  cfg.h = o.h;
  cfg.seed = o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.options.re_j_orthogonalize = !o.no_rejorth;
  cfg.cache_references = !o.no_cache;
  return cfg;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--problem", o.problems, "lw, sg, kg1, kg2, ns1, ns2 or all")->delimiter(',');
  cmd->add_option("--h", o.h, "step size h")->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed of the random vector b")->capture_default_str();
  cmd->add_option("--out", o.out, "output directory (default $HAMKRYLOV_OUT or ./results)");
  cmd->add_flag("--no-rejorth", o.no_rejorth, "disable re-J-orthogonalization");
  cmd->add_flag("--no-cache", o.no_cache, "recompute dense references instead of reading the cache");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving Krylov approximations of exp(hH)b and phi(hH)b"};
  app.require_subcommand(1);
  // -h would clash with --h, the step size
  app.set_help_flag("--help", "print this help message and exit");
  Options o;

  auto* conv = app.add_subcommand("convergence", "relative error versus subspace dimension");
  add_common(conv, o);
  conv->add_option("--method", o.methods, "A, HL, SA, IA, HEKS, BJ or all")->delimiter(',');
  conv->add_option("--function", o.functions, "exp, phi_expl, phi_impl or all")->delimiter(',');
  conv->add_option("--rmax", o.r_max, "largest r; r runs over 2, 4, ..., rmax")->capture_default_str();

  auto* phi = app.add_subcommand("phi-consistency", "explicit versus implicit phi at full dimension");
  add_common(phi, o);

  auto* adaptive = app.add_subcommand("adaptive", "actual error and estimate per k");
  add_common(adaptive, o);
  adaptive->add_option("--method", o.methods, "A, HL or all (meaning both)")->delimiter(',');
  adaptive->add_option("--kmax", o.k_max, "largest k")->capture_default_str();

  auto* timings = app.add_subcommand("timings", "median basis construction time");
  add_common(timings, o);
  timings->add_option("--method", o.methods, "A, HL, SA, IA, HEKS, BJ or all")->delimiter(',');
  timings->add_option("--rmax", o.r_max, "largest r; r runs over 2, 4, ..., rmax")->capture_default_str();

  auto* exporter = app.add_subcommand("export-matrix", "write H (and optionally S, Ht) as Matrix Market");
  add_common(exporter, o);
  std::string export_method;
  exporter->add_option("--method", export_method, "also export the decomposition of this method");
  exporter->add_option("--rmax", o.r_max, "r of the exported decomposition")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const hh::RunConfig cfg = make_config(o);
    if (*conv) {
      const auto records = hh::run_convergence(cfg);
      std::cout << "wrote " << records.size() << " rows to " << (cfg.output_dir / "convergence.csv").string() << '\n';
    } else if (*phi) {
      for (const auto& row : hh::run_phi_consistency(cfg))
        std::cout << hk::to_string(row.problem) << ' ' << (row.skipped ? "skipped" : hh::format_real(row.rel_difference))
                  << '\n';
    } else if (*adaptive) {
      std::vector<hk::MethodId> methods;
      for (hk::MethodId m : cfg.methods)
        if (m == hk::MethodId::kA || m == hk::MethodId::kHL) methods.push_back(m);
      if (methods.empty()) throw CLI::ValidationError("adaptive supports --method A or HL");
      for (hk::ProblemId p : cfg.problems) {
        for (hk::MethodId m : methods) {
          std::cout << hk::to_string(p) << ' ' << hk::to_string(m) << '\n';
          for (const auto& row : hh::run_adaptive_table(cfg, p, m, o.k_max))
            std::cout << "  k=" << row.k << " actual=" << hh::format_real(row.actual_error)
                      << " estimate=" << hh::format_real(row.estimate) << '\n';
        }
      }
    } else if (*timings) {
      const auto records = hh::run_timings(cfg);
      std::cout << "wrote " << records.size() << " rows to " << (cfg.output_dir / "timings.csv").string() << '\n';
    } else if (*exporter) {
      std::optional<hk::MethodId> method;
      if (!export_method.empty()) {
        method = hk::parse_method(export_method);
        if (!method) throw CLI::ValidationError("unknown method '" + export_method + "'");
      }
      for (hk::ProblemId p : cfg.problems)
        for (const auto& path : hh::export_matrices(cfg, p, method, o.r_max)) std::cout << path.string() << '\n';
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

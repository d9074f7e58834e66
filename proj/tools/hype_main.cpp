#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hype/bench.hpp"
#include "hype/config.hpp"
#include "hype/encoding.hpp"
#include "hype/matrix_io.hpp"
#include "hype/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // assertion or overflow failure
constexpr int kExitUsage = 2;    // usage / config error

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> width;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_config) {
  if (with_config) {
    cmd->add_option("--config", opts.config_path, "Run configuration file (key = value lines)");
  }
  cmd->add_option("--out", opts.out_path, "Output file path (stdout when omitted)");
  cmd->add_option("--seed", opts.seed, "Override the configured RNG seed");
  cmd->add_option("--width", opts.width, "Override the float width")
      ->check(CLI::IsMember({"f32", "f64"}));
}

hype::RunConfig load_config(const CommonOptions& opts) {
  hype::RunConfig config =
      opts.config_path.empty() ? hype::RunConfig{} : hype::parse_config_file(opts.config_path);
  if (opts.seed) {
    config.seed = *opts.seed;
  }
  if (opts.width) {
    config.width = *opts.width == "f32" ? hype::FloatWidth::f32 : hype::FloatWidth::f64;
  }
  return config;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') {
      std::cout << '\n';
    }
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    throw hype::ConfigError("cannot open output file '" + out_path + "'");
  }
  out << content;
}

int cmd_verify(const CommonOptions& opts, std::optional<double> tolerance, bool parallel) {
  const hype::RunConfig config = load_config(opts);
  hype::VerifyOptions verify_opts;
  verify_opts.tolerance_override = tolerance;
  verify_opts.parallel = parallel;
  const hype::VerifyReport report = hype::run_verify(config, verify_opts);
  for (const hype::SuiteResult& suite : report.suites) {
    std::printf("%s %-18s max_error=%.6e tolerance=%.6e\n", suite.passed ? "PASS" : "FAIL",
                suite.name.c_str(), suite.max_error, suite.tolerance);
    if (!suite.passed) {
      std::printf("     first failing assertion: %s\n", suite.detail.c_str());
    }
  }
  if (!opts.out_path.empty()) {
    write_output(opts.out_path, hype::verify_report_json(report));
  }
  if (!report.all_passed) {
    std::fprintf(stderr, "verify: one or more suites failed\n");
    return kExitFailure;
  }
  std::printf("verify: all suites passed\n");
  return kExitOk;
}

int cmd_bias_dump(std::size_t length, double mu, double tau, const std::string& format,
                  const CommonOptions& opts) {
  const hype::FloatWidth width =
      opts.width && *opts.width == "f32" ? hype::FloatWidth::f32 : hype::FloatWidth::f64;
  const hype::BiasMatrix bias = hype::build_bias_hype(length, hype::HypeHeadParams{mu, tau}, width);
  if (format == "csv") {
    write_output(opts.out_path, hype::to_csv(bias.values));
  } else {
    write_output(opts.out_path, hype::to_json(bias.values));
  }
  return kExitOk;
}

int cmd_bench(const CommonOptions& opts) {
  const hype::RunConfig config = load_config(opts);
  const hype::BenchReport report = hype::run_bench(config);
  std::fprintf(stderr,
               "bench: L=%zu heads=%zu n_copies=%zu  pe_values concat=%zu explicit=%zu  "
               "wall concat=%.6fs explicit=%.6fs  max_err=%.3e\n",
               config.seq_len, config.n_heads, config.n_copies, report.stored_pe_values_hype,
               report.stored_pe_values_explicit, report.wall_time_concat,
               report.wall_time_explicit, report.max_equivalence_error);
  write_output(opts.out_path, hype::bench_report_json(report));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic positional encoding toolkit"};
  app.require_subcommand(1);

  CommonOptions verify_opts;
  std::optional<double> tolerance;
  bool parallel = false;
  CLI::App* verify = app.add_subcommand("verify", "Run the equivalence/verification suites");
  add_common(verify, verify_opts, /*with_config=*/true);
  verify->add_option("--tolerance", tolerance,
                     "Tighten every suite tolerance to at most this value (negative control)");
  verify->add_flag("--parallel", parallel, "Run suites concurrently");

  CommonOptions dump_opts;
  std::size_t length = 0;
  double mu = 0.0;
  double tau = 1.0;
  std::string format = "csv";
  CLI::App* dump = app.add_subcommand("bias-dump", "Write an explicit bias matrix");
  dump->add_option("-L,--length", length, "Sequence length")->required();
  dump->add_option("--mu", mu, "Slope parameter")->required();
  dump->add_option("--tau", tau, "Amplitude parameter");
  dump->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  add_common(dump, dump_opts, /*with_config=*/false);

  CommonOptions bench_opts;
  CLI::App* bench = app.add_subcommand("bench", "Benchmark concat vs explicit-mask storage/time");
  add_common(bench, bench_opts, /*with_config=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (verify->parsed()) {
      return cmd_verify(verify_opts, tolerance, parallel);
    }
    if (dump->parsed()) {
      return cmd_bias_dump(length, mu, tau, format, dump_opts);
    }
    return cmd_bench(bench_opts);
  } catch (const hype::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const hype::OverflowError& e) {
    std::fprintf(stderr, "overflow: %s\n", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}

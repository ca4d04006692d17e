#pragma once

// smoothtail command-line front end. Exit codes: 0 success, 1 usage or
// validation error, 2 numerical failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <smoothtail/smoothtail.hpp>

namespace smoothtail::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNumerical = 2;

namespace detail {

inline std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<double> load_sample(const std::string& path) {
  std::istringstream in(slurp(path));
  auto xs = read_sample(in);
  if (xs.empty()) throw InvalidArgument("'" + path + "' contains no data");
  return xs;
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << text;
}

inline KRange parse_k_range(const std::string& s) {
  auto sep = s.find("..");
  std::size_t skip = 2;
  if (sep == std::string::npos) {
    sep = s.find(':');
    skip = 1;
  }
  if (sep == std::string::npos) throw InvalidArgument("--k-range expects LO:HI");
  try {
    const auto lo = std::stoul(s.substr(0, sep));
    const auto hi = std::stoul(s.substr(sep + skip));
    if (lo > hi) throw InvalidArgument("--k-range: LO exceeds HI");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw InvalidArgument("--k-range expects LO:HI");
  }
}

inline std::vector<double> parse_levels(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v;
    if (!smoothtail::detail::parse_number(smoothtail::detail::trim(item), v))
      throw InvalidArgument("not a probability level: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smooth tail-index estimation with log-concave density estimates", "smoothtail"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto add_fit_options = [&](CLI::App* sub) {
    sub->add_option("--tol", fit_opt.tolerance, "Optimality tolerance of the log-concave fit")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", fit_opt.max_iterations, "Active-set iteration cap")->check(CLI::PositiveNumber);
  };

  // fit
  std::string fit_input, fit_output;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a log-concave density and write it as JSON");
  fit_cmd->add_option("-i,--input", fit_input, "Data file (one number per line), '-' for stdin")->required();
  fit_cmd->add_option("-o,--output", fit_output, "Fit JSON path (default: stdout)");
  add_fit_options(fit_cmd);

  // quantiles
  std::string q_fit, q_levels, q_output;
  auto* q_cmd = app.add_subcommand("quantiles", "Quantiles of the smooth distribution function of a fit");
  q_cmd->add_option("-f,--fit", q_fit, "Fit JSON written by 'fit'")->required();
  q_cmd->add_option("-l,--levels", q_levels, "Comma-separated probability levels")->required();
  q_cmd->add_option("-o,--output", q_output, "CSV path (default: stdout)");

  // estimate / hillplot share most options
  std::string e_input, e_estimator = "pickands", e_source = "both", e_output, e_krange;
  std::size_t e_k = 0;
  std::optional<double> e_omega;
  bool e_truncate = false;
  auto* est_cmd = app.add_subcommand("estimate", "Tail-index estimate at a single k");
  auto* hill_cmd = app.add_subcommand("hillplot", "Tail-index estimates for every k");
  for (auto* sub : {est_cmd, hill_cmd}) {
    sub->add_option("-i,--input", e_input, "Data file, '-' for stdin")->required();
    sub->add_option("-e,--estimator", e_estimator, "pickands, falk or mvue")
        ->check(CLI::IsMember({"pickands", "falk", "mvue"}));
    sub->add_option("-s,--source", e_source, "empirical, smoothed or both")
        ->check(CLI::IsMember({"empirical", "smoothed", "both"}));
    sub->add_option("--omega", e_omega, "Known upper endpoint (required for mvue)");
    sub->add_flag("--truncate", e_truncate, "Clamp estimates to [-1,0]");
    sub->add_option("-o,--output", e_output, "CSV path (default: stdout)");
    add_fit_options(sub);
  }
  est_cmd->add_option("-k", e_k, "Number of upper order statistics")->required();
  hill_cmd->add_option("--k-range", e_krange, "Restrict k to LO:HI");

  // simulate
  std::string s_manifest, s_output, s_meta;
  std::optional<std::uint64_t> s_seed;
  unsigned s_threads = 1;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo relative-efficiency experiment");
  sim_cmd->add_option("-m,--manifest", s_manifest, "Experiment manifest (JSON)")->required();
  sim_cmd->add_option("-o,--output", s_output, "Efficiency table CSV (default: stdout)");
  sim_cmd->add_option("--meta", s_meta, "Run metadata JSON path");
  sim_cmd->add_option("--seed", s_seed, "Overrides the manifest seed");
  sim_cmd->add_option("--threads", s_threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (fit_cmd->parsed()) {
      const auto data = prepare_sample(detail::load_sample(fit_input));
      const auto res = fit_logconcave(data, fit_opt);
      detail::write_text(fit_output, fit_to_json(res.fit), out);
      std::ostream& summary = (fit_output.empty() || fit_output == "-") ? err : out;
      summary << "n=" << data.raw_n << " knots=" << res.fit.knots().size()
              << " log_likelihood=" << format_double(res.diagnostics.log_likelihood)
              << " final_gap=" << format_double(res.diagnostics.final_gap) << "\n";
      return kOk;
    }

    if (q_cmd->parsed()) {
      const SmoothCdf cdf(fit_from_json(detail::slurp(q_fit)));
      std::ostringstream csv;
      csv << "level,quantile\n";
      for (double q : detail::parse_levels(q_levels)) csv << format_double(q) << ',' << format_double(cdf.inverse(q)) << '\n';
      detail::write_text(q_output, csv.str(), out);
      return kOk;
    }

    if (est_cmd->parsed() || hill_cmd->parsed()) {
      const auto kind = parse_estimator(e_estimator);
      if (kind == EstimatorKind::MVUE && !e_omega) throw InvalidArgument("mvue requires --omega");
      const auto raw = detail::load_sample(e_input);
      const EmpiricalQuantiles emp(raw);
      const double x_max = emp.sorted().back();
      const double aux = kind == EstimatorKind::Falk ? x_max : e_omega.value_or(0.0);
      std::optional<SmoothedQuantiles> smooth;
      if (e_source != "empirical") smooth.emplace(SmoothCdf(fit_logconcave(raw, fit_opt).fit));

      std::ostringstream csv;
      if (est_cmd->parsed()) {
        csv << "estimator,source,k,value,raw_value,truncated\n";
        auto emit = [&](const TailEstimate& t) {
          csv << to_string(t.kind) << ',' << to_string(t.source) << ',' << t.k << ',' << format_double(t.value)
              << ',' << format_double(t.raw_value) << ',' << (t.truncated ? 1 : 0) << '\n';
        };
        auto one = [&](const auto& h) {
          switch (kind) {
            case EstimatorKind::Pickands: return pickands(h, e_k, e_truncate);
            case EstimatorKind::Falk: return falk(h, e_k, x_max, e_truncate);
            case EstimatorKind::MVUE: return mvue(h, e_k, aux, e_truncate);
          }
          throw InvalidArgument("unknown estimator");
        };
        if (e_source != "smoothed") emit(one(emp));
        if (smooth) emit(one(*smooth));
      } else {
        std::optional<KRange> restrict;
        if (!e_krange.empty()) restrict = detail::parse_k_range(e_krange);
        write_hill_csv_header(csv);
        if (e_source != "smoothed") write_hill_csv_rows(csv, hill_series(emp, kind, aux, e_truncate, restrict));
        if (smooth) write_hill_csv_rows(csv, hill_series(*smooth, kind, aux, e_truncate, restrict));
      }
      detail::write_text(e_output, csv.str(), out);
      return kOk;
    }

    if (sim_cmd->parsed()) {
      const auto spec = manifest_from_json(detail::slurp(s_manifest), s_seed);
      const auto t0 = std::chrono::steady_clock::now();
      const auto table = run_experiment(spec, s_threads);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ostringstream csv;
      write_efficiency_csv(csv, table);
      detail::write_text(s_output, csv.str(), out);
      if (!s_meta.empty()) {
        nlohmann::json meta;
        meta["manifest"] = manifest_to_json(spec);
        meta["seed"] = spec.seed;
        meta["M"] = spec.M;
        meta["threads"] = s_threads;
        meta["wall_time_seconds"] = wall;
        meta["fit_failures"] = table.fit_failures;
        meta["undefined_emp"] = table.undefined_emp();
        meta["undefined_smooth"] = table.undefined_smooth();
        meta["rows"] = table.rows.size();
        detail::write_text(s_meta, meta.dump(2) + "\n", out);
      }
      return kOk;
    }
  } catch (const ConvergenceError& e) {
    const auto& d = e.diagnostics();
    err << "error: " << e.what() << " (iterations=" << d.iterations << " final_gap=" << format_double(d.final_gap)
        << " knots=" << d.active_knots << ")\n";
    return kNumerical;
  } catch (const UndefinedEstimate& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace smoothtail::cli

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lionlab/io.hpp"
#include "lionlab/jobs.hpp"
#include "lionlab/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file")->required();
  cmd->add_option("-o,--out", opts.out_dir,
                  "output directory (default: $LIONLAB_OUT or '.')");
  cmd->add_option("--set", opts.overrides,
                  "override a config field, e.g. --set optimizer.eta=0.01");
  cmd->add_option("--threads", opts.threads,
                  "worker threads for grids/sweeps (default: $LIONLAB_THREADS or 1)");
  cmd->add_flag("-v,--verbose", opts.verbose, "extra progress output");
}

std::string resolve_out_dir(const CommonOpts& opts) {
  std::string dir = opts.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("LIONLAB_OUT");
    dir = env ? env : ".";
  }
  std::filesystem::create_directories(dir);
  return dir;
}

std::size_t resolve_threads(const CommonOpts& opts) {
  return opts.threads > 0 ? opts.threads : lionlab::env_thread_count();
}

// Applies key=value overrides onto the loaded JSON document. Values parse as
// JSON scalars where possible and fall back to strings.
std::string load_config(const CommonOpts& opts) {
  if (!std::filesystem::exists(opts.config_path)) {
    throw lionlab::ConfigError("config file not found: " + opts.config_path);
  }
  json doc;
  try {
    doc = json::parse(lionlab::io::read_text_file(opts.config_path));
  } catch (const json::parse_error& e) {
    throw lionlab::ConfigError(std::string("invalid JSON in ") + opts.config_path +
                               ": " + e.what());
  }
  for (const std::string& kv : opts.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw lionlab::ConfigError("override must look like key=value: " + kv);
    }
    const std::string path = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    json* cur = &doc;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t dot = path.find('.', pos);
      const std::string key =
          path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (key.empty()) throw lionlab::ConfigError("bad override path: " + path);
      if (dot == std::string::npos) {
        (*cur)[key] = value;
        break;
      }
      cur = &(*cur)[key];
      pos = dot + 1;
    }
  }
  return doc.dump();
}

int cmd_run(const CommonOpts& opts) {
  const std::string text = load_config(opts);
  const lionlab::RunConfig cfg = lionlab::parse_run_config(text);
  if (opts.verbose) {
    std::fprintf(stderr, "resolved config:\n%s\n",
                 lionlab::run_config_to_json(cfg).c_str());
  }
  const lionlab::RunLog log = lionlab::run(cfg);
  const std::string dir = resolve_out_dir(opts);
  const std::string stem = dir + "/run_" + log.summary.config_hash + "_i" +
                           std::to_string(cfg.seeds.init) + "_x" +
                           std::to_string(cfg.seeds.index);
  lionlab::io::write_text_file(stem + ".csv", lionlab::io::run_csv(log));
  lionlab::io::write_text_file(stem + ".json",
                               lionlab::io::run_summary_json(cfg, log));
  for (const std::string& w : log.summary.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  if (log.summary.aborted) {
    std::fprintf(stderr, "run aborted at step %zu (non-finite value)\n",
                 log.summary.abort_step);
    return kExitRuntime;
  }
  std::printf("run %s steps=%zu final_train=%.6g final_test=%.6g l1_grad=%.6g\n",
              log.summary.config_hash.c_str(), cfg.steps,
              log.summary.final_train_loss, log.summary.final_test_loss,
              log.summary.final_l1_grad);
  return kExitOk;
}

int cmd_grid(const CommonOpts& opts) {
  const std::string text = load_config(opts);
  const lionlab::GridJob job = lionlab::parse_grid_config(text);
  const std::string hash = lionlab::grid_job_hash(job);
  std::size_t total = 1;
  for (const lionlab::GridAxis& ax : job.spec.axes) total *= ax.values.size();
  std::printf("grid %s: %zu cells over %zu axes\n", hash.c_str(), total,
              job.spec.axes.size());
  std::fflush(stdout);
  const lionlab::GridResult grid =
      lionlab::grid_search(job.spec, resolve_threads(opts));
  const std::string dir = resolve_out_dir(opts);
  lionlab::io::write_text_file(dir + "/grid_" + hash + ".csv",
                               lionlab::io::grid_csv(grid, hash));
  lionlab::io::write_text_file(dir + "/grid_" + hash + ".json",
                               lionlab::io::grid_json(grid, hash));
  if (grid.all_aborted) {
    std::fprintf(stderr, "grid %s: every cell aborted (see table)\n", hash.c_str());
    return kExitRuntime;
  }
  const lionlab::GridCell& best = grid.cells[grid.best_index];
  std::printf("grid %s cells=%zu best=%s metric=%.6g\n", hash.c_str(),
              grid.cells.size(), best.config_hash.c_str(), best.metric);
  return kExitOk;
}

int cmd_stability(const CommonOpts& opts) {
  const std::string text = load_config(opts);
  lionlab::StabilityJob job = lionlab::parse_stability_config(text);
  lionlab::resolve_stability_job(job);
  const std::string hash = lionlab::stability_job_hash(job);
  const std::string dir = resolve_out_dir(opts);
  if (job.is_sweep) {
    const lionlab::SweepResult res =
        lionlab::stability_sweep(job.base, job.n_grid, job.replicates,
                                 resolve_threads(opts));
    lionlab::io::write_text_file(dir + "/sweep_" + hash + ".csv",
                                 lionlab::io::sweep_csv(res, hash));
    lionlab::io::write_text_file(dir + "/sweep_" + hash + ".json",
                                 lionlab::io::sweep_json(res, hash));
    if (res.degenerate) {
      std::printf("sweep %s: %s\n", hash.c_str(), res.note.c_str());
    } else {
      std::printf("sweep %s slope=%.4f stderr=%.4f\n", hash.c_str(), res.slope,
                  res.slope_stderr);
    }
  } else {
    const lionlab::StabilityReport rep = lionlab::twin_run(job.base);
    lionlab::io::write_text_file(dir + "/stability_curve_" + hash + ".csv",
                                 lionlab::io::stability_curve_csv(rep, hash));
    lionlab::io::write_text_file(
        dir + "/stability_" + hash + ".json",
        lionlab::io::stability_summary_json(rep, hash, job.base.steps));
    std::printf("twin %s final_divergence=%.6g gap=%.6g zero_divergence=%s\n",
                hash.c_str(), rep.final_divergence, rep.gap_estimate,
                rep.zero_divergence ? "true" : "false");
  }
  return kExitOk;
}

int cmd_diagnose(const CommonOpts& opts) {
  const std::string text = load_config(opts);
  const lionlab::DiagnoseJob job = lionlab::parse_diagnose_config(text);
  const lionlab::DiagnoseReport rep = lionlab::diagnose(job, resolve_threads(opts));
  const std::string dir = resolve_out_dir(opts);
  lionlab::io::write_text_file(dir + "/diagnostics_" + rep.config_hash + ".json",
                               lionlab::io::diagnostics_json(rep));
  lionlab::io::write_text_file(dir + "/diagnostics_curve_" + rep.config_hash + ".csv",
                               lionlab::io::diagnostics_curve_csv(rep));
  std::printf("diagnose %s tau=%s nu0=%s branch_fraction=%.3f avg_l1=%.6g\n",
              rep.config_hash.c_str(),
              rep.tau ? std::to_string(*rep.tau).c_str() : "none",
              rep.nu0 ? std::to_string(*rep.nu0).c_str() : "none",
              rep.branch_fraction, rep.avg_l1_final_mean);
  if (rep.lemma2_ran) {
    std::printf("  lemma2: %s violations=%zu\n",
                rep.lemma2.preconditions_ok ? "checked"
                                            : rep.lemma2.precondition_note.c_str(),
                rep.lemma2.violations.size());
  }
  if (rep.lemma3_ran) {
    std::printf("  lemma3: lhs=%.6g rhs=%.6g ok=%s\n", rep.lemma3.lhs, rep.lemma3.rhs,
                rep.lemma3.ok ? "true" : "false");
  }
  return kExitOk;
}

int cmd_compare(const CommonOpts& opts) {
  const std::string text = load_config(opts);
  const lionlab::CompareSpec spec = lionlab::parse_compare_config(text);
  const lionlab::CompareResult res = lionlab::compare(spec, resolve_threads(opts));
  const std::string hash = lionlab::compare_spec_hash(spec);
  const std::string dir = resolve_out_dir(opts);
  lionlab::io::write_text_file(dir + "/compare_" + hash + ".csv",
                               lionlab::io::compare_csv(res, hash));
  lionlab::io::write_text_file(dir + "/compare_curves_" + hash + ".csv",
                               lionlab::io::compare_curves_csv(res, hash));
  bool all_aborted = true;
  for (const lionlab::CompareRow& r : res.rows) {
    std::printf("%-10s train=%.6g test=%.6g l1=%.6g %s\n", r.label.c_str(),
                r.final_train_loss, r.final_test_loss, r.avg_l1_grad,
                r.aborted ? "[aborted]" : "");
    all_aborted = all_aborted && r.aborted;
  }
  if (all_aborted) {
    std::fprintf(stderr, "compare %s: every entry aborted\n", hash.c_str());
    return kExitRuntime;
  }
  std::printf("compare %s rows=%zu\n", hash.c_str(), res.rows.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lion/CLion optimizer experiment harness"};
  app.set_version_flag("--version", std::string("lionlab ") + lionlab::kVersion);
  app.require_subcommand(1);

  CommonOpts run_o, grid_o, stab_o, diag_o, cmp_o;
  add_common(app.add_subcommand("run", "execute one optimizer run"), run_o);
  add_common(app.add_subcommand("grid", "exhaustive grid search"), grid_o);
  add_common(app.add_subcommand("stability", "twin-trajectory probe or N-sweep"),
             stab_o);
  add_common(app.add_subcommand("diagnose", "trajectory inequality checks"), diag_o);
  add_common(app.add_subcommand("compare", "multi-optimizer comparison table"), cmp_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run_o);
    if (app.got_subcommand("grid")) return cmd_grid(grid_o);
    if (app.got_subcommand("stability")) return cmd_stability(stab_o);
    if (app.got_subcommand("diagnose")) return cmd_diagnose(diag_o);
    if (app.got_subcommand("compare")) return cmd_compare(cmp_o);
  } catch (const lionlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}

#include "lionlab/jobs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "harness_internal.hpp"
#include "json_util.hpp"
#include "lionlab/rng.hpp"
#include "parallel.hpp"

namespace lionlab {

using nlohmann::json;
using detail::bad;
using detail::check_keys;
using detail::get_bool;
using detail::get_num;
using detail::get_size;
using detail::get_str;
using detail::get_u64;
using detail::parse_axes;

namespace {

ProblemSpec parse_problem_spec(const json& jp) {
  check_keys(jp, "problem", {"kind", "dim", "hidden"});
  ProblemSpec ps;
  try {
    ps.kind = problem_kind_from_name(get_str(jp, "kind"));
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  ps.dim = get_size(jp, "dim", 0);
  if (ps.dim < 1) bad("problem.dim must be >= 1");
  ps.hidden = get_size(jp, "hidden", 16);
  return ps;
}

DatasetSpec parse_dataset_spec(const json& jd) {
  check_keys(jd, "dataset", {"generator", "seed", "n", "test_multiplier"});
  DatasetSpec ds;
  try {
    ds.generator = generator_from_name(get_str(jd, "generator"));
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  ds.seed = get_u64(jd, "seed", 0);
  ds.n = get_size(jd, "n", 0);
  if (ds.n < 1) bad("dataset.n must be >= 1");
  ds.test_multiplier = get_size(jd, "test_multiplier", 10);
  if (ds.test_multiplier < 1) bad("dataset.test_multiplier must be >= 1");
  return ds;
}

InitSpec parse_init_spec(const json& ji) {
  check_keys(ji, "init", {"kind", "scale"});
  InitSpec init;
  const std::string k = get_str(ji, "kind");
  if (k == "zeros") {
    init.kind = InitSpec::Kind::zeros;
  } else if (k == "gauss") {
    init.kind = InitSpec::Kind::gauss;
  } else {
    bad("init.kind must be 'zeros' or 'gauss'");
  }
  init.scale = get_num(ji, "scale", 0.1);
  if (!(init.scale >= 0.0)) bad("init.scale must be non-negative");
  return init;
}

ScheduleSpec parse_schedule_spec(const json& js) {
  check_keys(js, "schedule", {"kind", "c_eta", "alpha", "lambda_from_cap"});
  ScheduleSpec sp;
  sp.kind = schedule_kind_from_name(get_str(js, "kind"));
  sp.c_eta = get_num(js, "c_eta", 1.0);
  if (!(sp.c_eta > 0.0)) bad("schedule.c_eta must be positive");
  sp.alpha = get_num(js, "alpha", 1.25);
  if (!(sp.alpha > 1.0)) bad("schedule alpha must exceed 1");
  sp.lambda_from_cap = get_bool(js, "lambda_from_cap", false);
  return sp;
}

// Shared lambda rules for schedules outside harness::run.
void apply_lambda_rules(OptimizerConfig& opt, const ScheduleSpec& sched,
                        const ResolvedSchedule& rs, bool allow_lambda_zero) {
  if (sched.lambda_from_cap) {
    if (!std::isfinite(rs.lambda_max)) {
      bad("lambda_from_cap requires a schedule with a lambda cap");
    }
    opt.lambda = rs.lambda_max;
  } else if (sched.kind == ScheduleKind::theorem3 && opt.lambda > rs.lambda_max) {
    bad("lambda exceeds the schedule cap 1/(2*eta*Ghat*T^alpha)");
  }
  const bool lion_like = opt.method == Method::lion || opt.method == Method::clion;
  if (lion_like && opt.lambda * opt.eta >= 1.0) {
    bad("lambda must satisfy lambda*eta < 1");
  }
  if (opt.method == Method::clion && opt.lambda == 0.0 && !allow_lambda_zero) {
    bad("clion expects lambda > 0; set allow_lambda_zero_clion to override");
  }
}

}  // namespace

StabilityJob parse_stability_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "stability config",
             {"problem", "dataset", "optimizer", "steps", "init", "seeds",
              "schedule", "twin", "sweep", "capture", "allow_lambda_zero_clion"});
  StabilityJob job;
  if (!j.contains("problem")) bad("missing required key 'problem'");
  job.base.problem = parse_problem_spec(j["problem"]);
  if (!j.contains("dataset")) bad("missing required key 'dataset'");
  job.base.dataset = parse_dataset_spec(j["dataset"]);
  if (!j.contains("optimizer")) bad("missing required key 'optimizer'");
  job.base.optimizer = harness_detail::parse_optimizer(j["optimizer"]);
  job.base.steps = get_size(j, "steps", 0);
  if (job.base.steps < 1) bad("steps must be >= 1");
  if (j.contains("init")) job.base.init = parse_init_spec(j["init"]);
  if (j.contains("seeds")) {
    check_keys(j["seeds"], "seeds", {"init", "index"});
    job.base.init_seed = get_u64(j["seeds"], "init", 1);
    job.base.index_seed = get_u64(j["seeds"], "index", 1);
  } else {
    job.base.init_seed = 1;
    job.base.index_seed = 1;
  }
  if (j.contains("schedule")) job.schedule = parse_schedule_spec(j["schedule"]);
  job.base.capture = get_bool(j, "capture", false);
  job.allow_lambda_zero_clion = get_bool(j, "allow_lambda_zero_clion", false);

  const bool has_twin = j.contains("twin");
  const bool has_sweep = j.contains("sweep");
  if (has_twin == has_sweep) {
    bad("stability config needs exactly one of 'twin' or 'sweep'");
  }
  if (has_twin) {
    check_keys(j["twin"], "twin", {"replace_index"});
    job.base.replace_index = get_size(j["twin"], "replace_index", 0);
    if (job.base.replace_index < 1 || job.base.replace_index > job.base.dataset.n) {
      bad("twin.replace_index must lie in [1, n]");
    }
  } else {
    check_keys(j["sweep"], "sweep", {"n_grid", "replicates"});
    if (!j["sweep"].contains("n_grid") || !j["sweep"]["n_grid"].is_array()) {
      bad("sweep.n_grid must be an array");
    }
    for (const json& v : j["sweep"]["n_grid"]) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        bad("sweep.n_grid entries must be integers");
      job.n_grid.push_back(v.get<std::size_t>());
    }
    if (job.n_grid.size() < 4) bad("need >=4 N values for slope fit");
    for (std::size_t a = 1; a < job.n_grid.size(); ++a) {
      if (job.n_grid[a] <= job.n_grid[a - 1])
        bad("sweep.n_grid must be strictly increasing");
    }
    job.replicates = get_size(j["sweep"], "replicates", 20);
    if (job.replicates < 10) bad("need >=10 replicates");
    job.is_sweep = true;
    job.base.replace_index = 1;  // per-replicate indices are derived in the sweep
  }
  job.canonical_json = j.dump();
  return job;
}

void resolve_stability_job(StabilityJob& job) {
  Problem problem = build_problem(job.base.problem);
  const Dataset train = build_train(job.base.dataset, problem.feature_dim());
  declare_constants(problem, train);
  const double g_hat = std::max(problem.lipschitz_G.value_or(0.0),
                                std::sqrt(static_cast<double>(problem.dim)));
  const ResolvedSchedule rs = schedule_params(job.schedule, job.base.steps,
                                              problem.dim, g_hat, job.base.optimizer);
  job.base.optimizer.eta = rs.eta;
  job.base.optimizer.beta1 = rs.beta1;
  job.base.optimizer.beta2 = rs.beta2;
  apply_lambda_rules(job.base.optimizer, job.schedule, rs,
                     job.allow_lambda_zero_clion);
}

std::string stability_job_hash(const StabilityJob& job) {
  return hash_bytes(job.canonical_json);
}

GridJob parse_grid_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "grid config", {"base", "axes", "metric", "replicate_index_seeds"});
  GridJob job;
  if (!j.contains("base")) bad("missing required key 'base'");
  // Validate the base config eagerly for a clear error location.
  harness_detail::parse_run_json(j["base"]);
  job.spec.base_json = j["base"].dump();
  if (!j.contains("axes")) bad("missing required key 'axes'");
  job.spec.axes = parse_axes(j["axes"], "axes");
  if (j.contains("metric")) {
    const std::string m = get_str(j, "metric");
    if (m == "final_test_loss") {
      job.spec.metric = GridMetric::final_test_loss;
    } else if (m == "final_train_loss") {
      job.spec.metric = GridMetric::final_train_loss;
    } else {
      bad("metric must be 'final_test_loss' or 'final_train_loss'");
    }
  }
  if (j.contains("replicate_index_seeds")) {
    if (!j["replicate_index_seeds"].is_array())
      bad("replicate_index_seeds must be an array");
    for (const json& v : j["replicate_index_seeds"]) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        bad("replicate_index_seeds entries must be integers");
      job.spec.replicate_index_seeds.push_back(v.get<std::uint64_t>());
    }
  }
  job.canonical_json = j.dump();
  return job;
}

std::string grid_job_hash(const GridJob& job) { return hash_bytes(job.canonical_json); }

DiagnoseJob parse_diagnose_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  DiagnoseJob job;
  json run_part = j;
  if (j.contains("diagnose")) {
    const json& jd = j["diagnose"];
    check_keys(jd, "diagnose",
               {"replicates", "lemma2", "lemma2_alpha", "lemma3", "sigma", "G", "L"});
    job.replicates = get_size(jd, "replicates", 1);
    if (job.replicates < 1) bad("diagnose.replicates must be >= 1");
    job.lemma2_enabled = get_bool(jd, "lemma2", true);
    job.lemma2_alpha = get_num(jd, "lemma2_alpha", 1.25);
    if (!(job.lemma2_alpha > 1.0)) bad("diagnose.lemma2_alpha must exceed 1");
    job.lemma3_enabled = get_bool(jd, "lemma3", false);
    if (jd.contains("sigma")) job.sigma_override = get_num(jd, "sigma", 0.0);
    if (jd.contains("G")) job.g_override = get_num(jd, "G", 0.0);
    if (jd.contains("L")) job.l_override = get_num(jd, "L", 0.0);
    run_part.erase("diagnose");
  }
  job.run_cfg = harness_detail::parse_run_json(run_part);
  job.run_cfg.capture_trajectory = true;
  job.canonical_json = j.dump();
  return job;
}

DiagnoseReport diagnose(const DiagnoseJob& job, std::size_t threads) {
  DiagnoseReport rep;
  rep.replicates = job.replicates;
  rep.steps = job.run_cfg.steps;
  rep.nu = job.run_cfg.optimizer.nu;
  rep.config_hash = config_hash(job.run_cfg);

  std::vector<RunLog> logs(job.replicates);
  const std::uint64_t seed_key =
      rng::stream_key(job.run_cfg.seeds.index, rng::Role::sweep);
  detail::parallel_for(job.replicates, threads, [&](std::size_t r) {
    RunConfig cfg = job.run_cfg;
    cfg.capture_trajectory = true;
    if (r > 0) cfg.seeds.index = rng::draw(seed_key, r);
    logs[r] = run(cfg);
  });
  for (std::size_t r = 0; r < logs.size(); ++r) {
    if (logs[r].summary.aborted) {
      throw std::runtime_error("diagnose: replicate " + std::to_string(r) +
                               " aborted at step " +
                               std::to_string(logs[r].summary.abort_step));
    }
  }

  Problem problem = build_problem(job.run_cfg.problem);
  const Dataset train = build_train(job.run_cfg.dataset, problem.feature_dim());
  declare_constants(problem, train);
  rep.nu0_floor = 1.0 / std::sqrt(static_cast<double>(problem.dim));

  std::vector<Trajectory> trajs;
  trajs.reserve(logs.size());
  for (RunLog& log : logs) trajs.push_back(std::move(*log.trajectory));

  double branch_acc = 0.0;
  for (const Trajectory& t : trajs) {
    const TauResult tr = tau_of(t);
    rep.tau_skipped += tr.skipped_steps;
    if (tr.tau && (!rep.tau || *tr.tau < *rep.tau)) rep.tau = tr.tau;
    const auto n0 = nu0_estimate(t);
    if (n0 && (!rep.nu0 || *n0 < *rep.nu0)) rep.nu0 = n0;
    branch_acc += branch_fraction(t);
  }
  rep.branch_fraction = branch_acc / static_cast<double>(trajs.size());

  rep.avg_l1 = avg_l1_grad(trajs[0], problem, train);
  double final_acc = rep.avg_l1.back();
  for (std::size_t r = 1; r < trajs.size(); ++r) {
    final_acc += avg_l1_grad(trajs[r], problem, train).back();
  }
  rep.avg_l1_final_mean = final_acc / static_cast<double>(trajs.size());

  for (std::size_t t = 0; t + 1 < trajs[0].c.size(); ++t) {
    const ParamVector& x = trajs[0].c[t];
    const ParamVector& y = trajs[0].c[t + 1];
    const PairCheck pc1 = check_lemmaC1(x, y);
    ++rep.lemmaC1_checked;
    if (!pc1.ok) ++rep.lemmaC1_violations;
    rep.lemmaC1_worst_margin = std::max(rep.lemmaC1_worst_margin, pc1.lhs - pc1.rhs);
    double pair_tau = std::numeric_limits<double>::infinity();
    for (const ParamVector* v : {&x, &y}) {
      const auto q = min_abs_nonzero(*v);
      if (q) pair_tau = std::min(pair_tau, *q);
    }
    if (!std::isfinite(pair_tau)) continue;
    const PairCheck pc = check_lemma1(x, y, pair_tau);
    ++rep.lemma1_checked;
    if (!pc.ok) ++rep.lemma1_violations;
    rep.lemma1_worst_margin = std::max(rep.lemma1_worst_margin, pc.lhs - pc.rhs);
  }

  // Constants: declared values when available, overrides first, else empirical.
  EffectiveG eg{0.0, false};
  if (job.g_override) {
    eg = {*job.g_override, false};
  } else {
    for (const Trajectory& t : trajs) {
      const EffectiveG cand = effective_G(t, problem);
      if (cand.value > eg.value) eg = cand;
    }
  }
  rep.g_used = eg.value;
  rep.g_empirical = eg.empirical;

  const RunSummary& sum = logs[0].summary;
  if (job.lemma2_enabled) {
    rep.lemma2 = check_lemma2(trajs[0], sum.eta, sum.lambda,
                              std::max(rep.g_used,
                                       std::sqrt(static_cast<double>(problem.dim))),
                              job.lemma2_alpha);
    rep.lemma2_ran = true;
  }

  if (job.lemma3_enabled) {
    if (job.sigma_override) {
      rep.sigma_used = *job.sigma_override;
    } else {
      // Empirical bounded-variance constant: max estimate over a few
      // checkpoints along the first trajectory.
      const Trajectory& t0 = trajs[0];
      double sig = 0.0;
      const std::size_t marks = 5;
      for (std::size_t k = 0; k < marks; ++k) {
        const std::size_t idx = (t0.w.size() - 1) * k / (marks - 1);
        sig = std::max(sig, grad_noise_sigma(problem, t0.w[idx], train));
      }
      rep.sigma_used = sig;
    }
    if (job.l_override) {
      rep.l_used = *job.l_override;
    } else if (problem.smooth_L) {
      rep.l_used = *problem.smooth_L;
    } else {
      bad("missing constants: L (problem declares none; set diagnose.L)");
    }
    Lemma3Constants k;
    k.sigma = rep.sigma_used;
    k.G = rep.g_used;
    k.L = rep.l_used;
    k.beta1 = sum.beta1;
    k.beta2 = sum.beta2;
    k.eta = sum.eta;
    rep.lemma3 = check_lemma3(trajs, problem, train, k);
    rep.lemma3_ran = true;
  }
  return rep;
}

CompareSpec parse_compare_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "compare config",
             {"problem", "dataset", "steps", "batch_size", "schedule", "record_every",
              "init", "seeds", "metric", "decouple_seeds", "optimizers",
              "allow_lambda_zero_clion", "capture_trajectory"});
  CompareSpec spec;
  if (!j.contains("optimizers") || !j["optimizers"].is_array() ||
      j["optimizers"].size() < 2) {
    bad("compare requires at least 2 optimizers");
  }
  if (j.contains("metric")) {
    const std::string m = get_str(j, "metric");
    if (m == "final_test_loss") {
      spec.metric = GridMetric::final_test_loss;
    } else if (m == "final_train_loss") {
      spec.metric = GridMetric::final_train_loss;
    } else {
      bad("metric must be 'final_test_loss' or 'final_train_loss'");
    }
  }
  spec.decouple_seeds = get_bool(j, "decouple_seeds", false);

  json base = j;
  base.erase("optimizers");
  base.erase("metric");
  base.erase("decouple_seeds");

  const json shared_problem = j.contains("problem") ? j["problem"] : json();
  const json shared_dataset = j.contains("dataset") ? j["dataset"] : json();
  for (const json& je : j["optimizers"]) {
    check_keys(je, "optimizers[]", {"label", "optimizer", "axes", "problem", "dataset"});
    if (je.contains("problem") && je["problem"] != shared_problem) {
      bad("compare entries must share one problem/dataset");
    }
    if (je.contains("dataset") && je["dataset"] != shared_dataset) {
      bad("compare entries must share one problem/dataset");
    }
    CompareEntry entry;
    if (!je.contains("optimizer")) bad("optimizers[] entries need an 'optimizer'");
    harness_detail::parse_optimizer(je["optimizer"]);  // validate early
    entry.optimizer_json = je["optimizer"].dump();
    entry.label = je.contains("label") ? get_str(je, "label")
                                       : get_str(je["optimizer"], "method");
    if (je.contains("axes")) entry.axes = parse_axes(je["axes"], "axes");
    spec.entries.push_back(std::move(entry));
  }

  // Every entry must produce a valid run config.
  for (const CompareEntry& e : spec.entries) {
    json cell = base;
    cell["optimizer"] = json::parse(e.optimizer_json);
    harness_detail::parse_run_json(cell);
  }
  spec.base_json = base.dump();
  spec.canonical_json = j.dump();
  return spec;
}

std::string compare_spec_hash(const CompareSpec& spec) {
  return hash_bytes(spec.canonical_json);
}

CompareResult compare(const CompareSpec& spec, std::size_t threads) {
  CompareResult out;
  const std::uint64_t decouple_key = rng::stream_key(0xc0, rng::Role::sweep);
  for (std::size_t e = 0; e < spec.entries.size(); ++e) {
    const CompareEntry& entry = spec.entries[e];
    json cell = json::parse(spec.base_json);
    cell["optimizer"] = json::parse(entry.optimizer_json);
    if (spec.decouple_seeds && e > 0) {
      RunConfig probe = harness_detail::parse_run_json(cell);
      cell["seeds"]["init"] = probe.seeds.init + rng::draw(decouple_key, 2 * e) % 1000;
      cell["seeds"]["index"] =
          probe.seeds.index + rng::draw(decouple_key, 2 * e + 1) % 1000;
    }

    RunConfig winner_cfg;
    if (entry.axes.empty()) {
      winner_cfg = harness_detail::parse_run_json(cell);
    } else {
      GridSpec gs;
      gs.base_json = cell.dump();
      gs.axes = entry.axes;
      gs.metric = spec.metric;
      const GridResult gr = grid_search(gs, threads);
      if (gr.all_aborted) {
        CompareRow row;
        row.label = entry.label;
        row.aborted = true;
        out.rows.push_back(row);
        out.winner_logs.emplace_back();
        continue;
      }
      json winner = json::parse(gs.base_json);
      const GridCell& best = gr.cells[gr.best_index];
      for (std::size_t a = 0; a < gr.axis_paths.size(); ++a) {
        harness_detail::set_path(winner, gr.axis_paths[a], best.values[a]);
      }
      winner_cfg = harness_detail::parse_run_json(winner);
    }

    const RunLog log = run(winner_cfg);
    CompareRow row;
    row.label = entry.label;
    row.method = method_name(winner_cfg.optimizer.method);
    row.config_hash = log.summary.config_hash;
    row.eta = log.summary.eta;
    row.beta1 = log.summary.beta1;
    row.beta2 = log.summary.beta2;
    row.lambda = log.summary.lambda;
    row.nu = winner_cfg.optimizer.nu;
    row.branch_fraction = log.summary.branch_fraction;
    row.final_train_loss = log.summary.final_train_loss;
    row.final_test_loss = log.summary.final_test_loss;
    row.avg_l1_grad = log.summary.avg_l1_grad_recorded;
    row.wall_seconds = log.summary.wall_seconds;
    row.aborted = log.summary.aborted;
    out.rows.push_back(std::move(row));
    out.winner_logs.push_back(std::move(log));
  }
  return out;
}

}  // namespace lionlab

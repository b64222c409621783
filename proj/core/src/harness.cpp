#include "lionlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "json.hpp"
#include "json_util.hpp"
#include "harness_internal.hpp"
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

namespace harness_detail {

OptimizerConfig parse_optimizer(const json& o) {
  check_keys(o, "optimizer",
             {"method", "eta", "beta1", "beta2", "lambda", "nu", "alpha_curve",
              "a_tanh", "e_indicator", "epsilon", "lionk_kind"});
  OptimizerConfig cfg;
  try {
    cfg.method = method_from_name(get_str(o, "method"));
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  cfg.eta = get_num(o, "eta", cfg.eta);
  cfg.beta1 = get_num(o, "beta1", cfg.beta1);
  cfg.beta2 = get_num(o, "beta2", cfg.beta2);
  cfg.lambda = get_num(o, "lambda", cfg.lambda);
  cfg.nu = get_num(o, "nu", cfg.nu);
  cfg.alpha_curve = get_num(o, "alpha_curve", cfg.alpha_curve);
  cfg.a_tanh = get_num(o, "a_tanh", cfg.a_tanh);
  cfg.e_indicator = get_num(o, "e_indicator", cfg.e_indicator);
  cfg.epsilon = get_num(o, "epsilon", cfg.epsilon);
  if (o.contains("lionk_kind")) {
    const std::string k = get_str(o, "lionk_kind");
    if (k == "tanh") {
      cfg.lionk_kind = LionKKind::tanh_k;
    } else if (k == "indicator_sign") {
      cfg.lionk_kind = LionKKind::indicator_sign;
    } else {
      bad("lionk_kind must be 'tanh' or 'indicator_sign'");
    }
  }
  try {
    validate_config(cfg);
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  return cfg;
}

json optimizer_to_json(const OptimizerConfig& c) {
  json o;
  o["method"] = method_name(c.method);
  o["eta"] = c.eta;
  o["beta1"] = c.beta1;
  o["beta2"] = c.beta2;
  o["lambda"] = c.lambda;
  o["nu"] = c.nu;
  o["alpha_curve"] = c.alpha_curve;
  o["a_tanh"] = c.a_tanh;
  o["e_indicator"] = c.e_indicator;
  o["epsilon"] = c.epsilon;
  o["lionk_kind"] =
      c.lionk_kind == LionKKind::tanh_k ? "tanh" : "indicator_sign";
  return o;
}

RunConfig parse_run_json(const json& j) {
  check_keys(j, "config",
             {"problem", "dataset", "optimizer", "steps", "batch_size", "schedule",
              "record_every", "init", "seeds", "capture_trajectory",
              "allow_lambda_zero_clion"});
  RunConfig cfg;

  if (!j.contains("problem")) bad("missing required key 'problem'");
  const json& jp = j["problem"];
  check_keys(jp, "problem", {"kind", "dim", "hidden"});
  try {
    cfg.problem.kind = problem_kind_from_name(get_str(jp, "kind"));
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  cfg.problem.dim = get_size(jp, "dim", 0);
  if (cfg.problem.dim < 1) bad("problem.dim must be >= 1");
  cfg.problem.hidden = get_size(jp, "hidden", 16);
  if (cfg.problem.hidden < 1) bad("problem.hidden must be >= 1");

  if (!j.contains("dataset")) bad("missing required key 'dataset'");
  const json& jd = j["dataset"];
  check_keys(jd, "dataset", {"generator", "seed", "n", "test_multiplier"});
  try {
    cfg.dataset.generator = generator_from_name(get_str(jd, "generator"));
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  cfg.dataset.seed = get_u64(jd, "seed", 0);
  cfg.dataset.n = get_size(jd, "n", 0);
  if (cfg.dataset.n < 1) bad("dataset.n must be >= 1");
  cfg.dataset.test_multiplier = get_size(jd, "test_multiplier", 10);
  if (cfg.dataset.test_multiplier < 1) bad("dataset.test_multiplier must be >= 1");

  const bool classification = cfg.problem.kind == ProblemKind::logistic ||
                              cfg.problem.kind == ProblemKind::mlp2;
  const bool labeled = cfg.dataset.generator == GeneratorId::two_cluster ||
                       cfg.dataset.generator == GeneratorId::adversarial_tau;
  if (classification && !labeled) {
    bad("logistic/mlp2 require the two-cluster generator");
  }

  if (!j.contains("optimizer")) bad("missing required key 'optimizer'");
  cfg.optimizer = parse_optimizer(j["optimizer"]);

  cfg.steps = get_size(j, "steps", 0);
  if (cfg.steps < 1) bad("steps must be >= 1");
  cfg.batch_size = get_size(j, "batch_size", 1);
  if (cfg.batch_size < 1) bad("batch_size must be >= 1");
  cfg.record_every = get_size(j, "record_every", 0);

  if (j.contains("schedule")) {
    const json& js = j["schedule"];
    check_keys(js, "schedule", {"kind", "c_eta", "alpha", "lambda_from_cap"});
    cfg.schedule.kind = schedule_kind_from_name(get_str(js, "kind"));
    cfg.schedule.c_eta = get_num(js, "c_eta", 1.0);
    if (!(cfg.schedule.c_eta > 0.0)) bad("schedule.c_eta must be positive");
    cfg.schedule.alpha = get_num(js, "alpha", 1.25);
    if (!(cfg.schedule.alpha > 1.0)) bad("schedule alpha must exceed 1");
    cfg.schedule.lambda_from_cap = get_bool(js, "lambda_from_cap", false);
  }

  if (j.contains("init")) {
    const json& ji = j["init"];
    check_keys(ji, "init", {"kind", "scale"});
    const std::string k = get_str(ji, "kind");
    if (k == "zeros") {
      cfg.init.kind = InitSpec::Kind::zeros;
    } else if (k == "gauss") {
      cfg.init.kind = InitSpec::Kind::gauss;
    } else {
      bad("init.kind must be 'zeros' or 'gauss'");
    }
    cfg.init.scale = get_num(ji, "scale", 0.1);
    if (!(cfg.init.scale >= 0.0)) bad("init.scale must be non-negative");
  }

  if (j.contains("seeds")) {
    const json& js = j["seeds"];
    check_keys(js, "seeds", {"init", "index"});
    cfg.seeds.init = get_u64(js, "init", 1);
    cfg.seeds.index = get_u64(js, "index", 1);
  }

  cfg.capture_trajectory = get_bool(j, "capture_trajectory", false);
  cfg.allow_lambda_zero_clion = get_bool(j, "allow_lambda_zero_clion", false);
  return cfg;
}

json run_config_json(const RunConfig& cfg) {
  json j;
  j["problem"] = {{"kind", problem_kind_name(cfg.problem.kind)},
                  {"dim", cfg.problem.dim},
                  {"hidden", cfg.problem.hidden}};
  j["dataset"] = {{"generator", generator_name(cfg.dataset.generator)},
                  {"seed", cfg.dataset.seed},
                  {"n", cfg.dataset.n},
                  {"test_multiplier", cfg.dataset.test_multiplier}};
  j["optimizer"] = optimizer_to_json(cfg.optimizer);
  j["steps"] = cfg.steps;
  j["batch_size"] = cfg.batch_size;
  j["schedule"] = {{"kind", schedule_kind_name(cfg.schedule.kind)},
                   {"c_eta", cfg.schedule.c_eta},
                   {"alpha", cfg.schedule.alpha},
                   {"lambda_from_cap", cfg.schedule.lambda_from_cap}};
  j["record_every"] = cfg.record_every;
  j["init"] = {{"kind", cfg.init.kind == InitSpec::Kind::zeros ? "zeros" : "gauss"},
               {"scale", cfg.init.scale}};
  j["seeds"] = {{"init", cfg.seeds.init}, {"index", cfg.seeds.index}};
  j["capture_trajectory"] = cfg.capture_trajectory;
  j["allow_lambda_zero_clion"] = cfg.allow_lambda_zero_clion;
  return j;
}

bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

json axis_value_json(const AxisValue& v) {
  if (std::holds_alternative<double>(v)) return json(std::get<double>(v));
  return json(std::get<std::string>(v));
}

void set_path(json& j, const std::string& path, const AxisValue& v) {
  json* cur = &j;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t dot = path.find('.', pos);
    const std::string key =
        path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) bad("bad override path: " + path);
    if (dot == std::string::npos) {
      (*cur)[key] = axis_value_json(v);
      return;
    }
    cur = &(*cur)[key];
    pos = dot + 1;
  }
}

}  // namespace harness_detail

using namespace harness_detail;

const char* schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::theorem3: return "theorem3";
    case ScheduleKind::theorem2_smallT: return "theorem2_smallT";
    case ScheduleKind::theorem2_largeT: return "theorem2_largeT";
  }
  return "?";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
  for (ScheduleKind k : {ScheduleKind::constant, ScheduleKind::theorem3,
                         ScheduleKind::theorem2_smallT, ScheduleKind::theorem2_largeT}) {
    if (name == schedule_kind_name(k)) return k;
  }
  throw ConfigError("unknown schedule kind: " + name);
}

ResolvedSchedule schedule_params(const ScheduleSpec& spec, std::size_t steps,
                                 std::size_t dim, double g_hat,
                                 const OptimizerConfig& base) {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(spec.alpha > 1.0)) throw ConfigError("schedule alpha must exceed 1");
  ResolvedSchedule r{base.eta, base.beta1, base.beta2,
                     std::numeric_limits<double>::infinity()};
  const double t_total = static_cast<double>(steps);
  const double root_d = std::sqrt(static_cast<double>(dim));
  switch (spec.kind) {
    case ScheduleKind::constant:
      break;
    case ScheduleKind::theorem3: {
      r.eta = spec.c_eta / std::pow(t_total, 0.75);
      const double rt = std::sqrt(t_total);
      r.beta1 = 1.0 - (1.0 - base.beta1) / rt;
      r.beta2 = 1.0 - (1.0 - base.beta2) / rt;
      r.lambda_max = 1.0 / (2.0 * r.eta * g_hat * std::pow(t_total, spec.alpha));
      break;
    }
    case ScheduleKind::theorem2_smallT:
      r.eta = 1.0 / root_d;
      r.lambda_max = 1.0 / r.eta;
      break;
    case ScheduleKind::theorem2_largeT:
      r.eta = 1.0 / (root_d * t_total);
      r.lambda_max = 1.0 / r.eta;
      break;
  }
  return r;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  return parse_run_json(j);
}

std::string run_config_to_json(const RunConfig& cfg) {
  return run_config_json(cfg).dump(2);
}

std::string hash_bytes(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

std::string config_hash(const RunConfig& cfg) {
  return hash_bytes(run_config_json(cfg).dump());
}

RunLog run(const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  try {
    validate_config(cfg.optimizer);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  Problem problem = build_problem(cfg.problem);
  const Dataset train = build_train(cfg.dataset, problem.feature_dim());
  const Dataset test = build_test(cfg.dataset, problem.feature_dim());
  declare_constants(problem, train);
  const double g_hat = std::max(problem.lipschitz_G.value_or(0.0),
                                std::sqrt(static_cast<double>(problem.dim)));

  const ResolvedSchedule rs =
      schedule_params(cfg.schedule, cfg.steps, problem.dim, g_hat, cfg.optimizer);
  OptimizerConfig opt = cfg.optimizer;
  opt.eta = rs.eta;
  opt.beta1 = rs.beta1;
  opt.beta2 = rs.beta2;

  RunLog log;
  if (cfg.schedule.lambda_from_cap) {
    if (!std::isfinite(rs.lambda_max)) {
      throw ConfigError("lambda_from_cap requires a schedule with a lambda cap");
    }
    opt.lambda = rs.lambda_max;
  } else if (cfg.schedule.kind == ScheduleKind::theorem3 &&
             opt.lambda > rs.lambda_max) {
    throw ConfigError("lambda exceeds the schedule cap 1/(2*eta*Ghat*T^alpha)");
  }

  const bool lion_like = opt.method == Method::lion || opt.method == Method::clion;
  if (lion_like && opt.lambda * opt.eta >= 1.0) {
    throw ConfigError("lambda must satisfy lambda*eta < 1");
  }
  if (opt.method == Method::clion && opt.lambda == 0.0 &&
      !cfg.allow_lambda_zero_clion) {
    throw ConfigError(
        "clion expects lambda > 0; set allow_lambda_zero_clion to override");
  }
  if (lion_like) {
    const double cap = 1.0 / (2.0 * opt.eta * g_hat *
                              std::pow(static_cast<double>(cfg.steps), 1.25));
    if (opt.lambda > cap) {
      log.summary.warnings.push_back(
          "lambda exceeds the iterate-bound cap 1/(2*eta*Ghat*T^1.25)");
    }
  }

  ParamVector w = make_init(cfg.init, cfg.seeds.init, problem.dim);
  OptimizerState state = make_state(opt, problem.dim);
  const std::size_t record_every =
      cfg.record_every > 0 ? cfg.record_every : std::max<std::size_t>(1, cfg.steps / 100);
  const std::uint64_t index_key = rng::stream_key(cfg.seeds.index, rng::Role::index);

  log.summary.config_hash = config_hash(cfg);
  log.summary.eta = opt.eta;
  log.summary.beta1 = opt.beta1;
  log.summary.beta2 = opt.beta2;
  log.summary.lambda = opt.lambda;

  if (cfg.capture_trajectory) {
    log.trajectory.emplace();
    log.trajectory->w.push_back(w);
    log.trajectory->config = opt;
    log.trajectory->declared_G = problem.lipschitz_G;
    log.trajectory->declared_L = problem.smooth_L;
  }

  bool aborted = false;
  std::size_t abort_step = 0;
  std::size_t sign_steps = 0, done_steps = 0;

  auto record = [&](std::size_t t, Branch b) {
    RunRow row;
    row.t = t;
    row.train_loss = full_loss(problem, w, train);
    row.test_loss = full_loss(problem, w, test);
    row.l1_grad = norm(full_grad(problem, w, train), NormKind::l1);
    row.w_norm = norm(w, NormKind::l2);
    row.branch = b;
    log.rows.push_back(row);
    if (!std::isfinite(row.train_loss) || !std::isfinite(row.test_loss)) {
      aborted = true;
      abort_step = t;
    }
  };

  record(0, Branch::na);
  for (std::size_t t = 1; t <= cfg.steps && !aborted; ++t) {
    ParamVector g;
    StepResult r;
    try {
      if (cfg.batch_size == 1) {
        const std::size_t j = rng::index_below(index_key, t - 1, train.n());
        g = grad(problem, w, train.samples[j]);
        if (cfg.capture_trajectory) {
          log.trajectory->sample_index.push_back(j);
          log.trajectory->sample_loss.push_back(loss(problem, w, train.samples[j]));
        }
      } else {
        g.assign(problem.dim, 0.0);
        double batch_loss = 0.0;
        std::size_t first = 0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
          const std::size_t j = rng::index_below(
              index_key, (t - 1) * cfg.batch_size + b, train.n());
          if (b == 0) first = j;
          const ParamVector gj = grad(problem, w, train.samples[j]);
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += gj[k];
          if (cfg.capture_trajectory) {
            batch_loss += loss(problem, w, train.samples[j]);
          }
        }
        const double inv = 1.0 / static_cast<double>(cfg.batch_size);
        for (double& x : g) x *= inv;
        if (cfg.capture_trajectory) {
          log.trajectory->sample_index.push_back(first);
          log.trajectory->sample_loss.push_back(batch_loss * inv);
        }
      }
      r = optimizer_step(w, g, state, opt);
    } catch (const std::domain_error&) {
      aborted = true;
      abort_step = t;
      break;
    }
    if (!all_finite(r.w)) {
      aborted = true;
      abort_step = t;
      break;
    }
    w = std::move(r.w);
    state = std::move(r.state);
    ++done_steps;
    if (state.branch_taken == Branch::sign) ++sign_steps;
    if (cfg.capture_trajectory) {
      log.trajectory->w.push_back(w);
      log.trajectory->c.push_back(std::move(r.dir.c));
      log.trajectory->g.push_back(std::move(g));
      log.trajectory->m.push_back(state.m);
      log.trajectory->branch.push_back(state.branch_taken);
    }
    if (t % record_every == 0 || t == cfg.steps) {
      record(t, state.branch_taken);
    }
  }

  log.w_final = w;
  log.summary.aborted = aborted;
  log.summary.abort_step = abort_step;
  log.summary.branch_fraction =
      done_steps == 0 ? 0.0
                      : static_cast<double>(sign_steps) / static_cast<double>(done_steps);
  if (!log.rows.empty()) {
    const RunRow& last = log.rows.back();
    log.summary.final_train_loss = last.train_loss;
    log.summary.final_test_loss = last.test_loss;
    log.summary.final_l1_grad = last.l1_grad;
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (const RunRow& row : log.rows) {
    if (row.t == 0) continue;
    acc += row.l1_grad;
    ++count;
  }
  log.summary.avg_l1_grad_recorded = count ? acc / static_cast<double>(count) : 0.0;
  log.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return log;
}

GridResult grid_search(const GridSpec& spec, std::size_t threads) {
  if (spec.base_json.empty()) bad("grid: missing base config");
  json base;
  try {
    base = json::parse(spec.base_json);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }

  // Sorted axis order with ascending values makes cell enumeration (and the
  // first-minimum tie break) independent of how the grid was written.
  std::vector<GridAxis> axes = spec.axes;
  std::sort(axes.begin(), axes.end(),
            [](const GridAxis& a, const GridAxis& b) { return a.path < b.path; });
  auto value_less = [](const AxisValue& a, const AxisValue& b) {
    const bool na = std::holds_alternative<double>(a);
    const bool nb = std::holds_alternative<double>(b);
    if (na != nb) return na;
    if (na) return std::get<double>(a) < std::get<double>(b);
    return std::get<std::string>(a) < std::get<std::string>(b);
  };
  for (GridAxis& ax : axes) {
    if (ax.values.empty()) bad("grid axis '" + ax.path + "' has no values");
    std::sort(ax.values.begin(), ax.values.end(), value_less);
  }

  std::size_t total = 1;
  for (const GridAxis& ax : axes) total *= ax.values.size();
  if (total == 0) bad("grid is empty");

  GridResult result;
  for (const GridAxis& ax : axes) result.axis_paths.push_back(ax.path);
  result.cells.resize(total);

  std::vector<std::string> cell_jsons(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    json cell = base;
    std::size_t rem = idx;
    GridCell& gc = result.cells[idx];
    gc.values.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const std::size_t vi = rem % axes[a].values.size();
      rem /= axes[a].values.size();
      gc.values[a] = axes[a].values[vi];
      set_path(cell, axes[a].path, axes[a].values[vi]);
    }
    cell_jsons[idx] = cell.dump();
    // Fail fast on malformed cells before any work is spent.
    const RunConfig cfg = parse_run_config(cell_jsons[idx]);
    gc.config_hash = config_hash(cfg);
  }

  const std::size_t reps = std::max<std::size_t>(1, spec.replicate_index_seeds.size());
  struct TaskOut {
    double metric = 0.0;
    double train = 0.0;
    double test = 0.0;
    bool aborted = false;
  };
  std::vector<TaskOut> outs(total * reps);
  detail::parallel_for(total * reps, threads, [&](std::size_t task) {
    const std::size_t idx = task / reps;
    const std::size_t r = task % reps;
    RunConfig cfg = parse_run_config(cell_jsons[idx]);
    if (!spec.replicate_index_seeds.empty()) {
      cfg.seeds.index = spec.replicate_index_seeds[r];
    }
    try {
      const RunLog log = run(cfg);
      TaskOut out;
      out.aborted = log.summary.aborted;
      out.train = log.summary.final_train_loss;
      out.test = log.summary.final_test_loss;
      out.metric = spec.metric == GridMetric::final_test_loss
                       ? log.summary.final_test_loss
                       : log.summary.final_train_loss;
      outs[task] = out;
    } catch (const ConfigError&) {
      outs[task].aborted = true;
    }
  });

  bool any_ok = false;
  for (std::size_t idx = 0; idx < total; ++idx) {
    GridCell& gc = result.cells[idx];
    double metric = 0.0, train = 0.0, test = 0.0;
    bool aborted = false;
    for (std::size_t r = 0; r < reps; ++r) {
      const TaskOut& o = outs[idx * reps + r];
      aborted = aborted || o.aborted;
      metric += o.metric;
      train += o.train;
      test += o.test;
    }
    gc.aborted = aborted;
    gc.metric = metric / static_cast<double>(reps);
    gc.final_train_loss = train / static_cast<double>(reps);
    gc.final_test_loss = test / static_cast<double>(reps);
    any_ok = any_ok || !aborted;
  }

  result.all_aborted = !any_ok;
  result.best_index = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < total; ++idx) {
    const GridCell& gc = result.cells[idx];
    if (gc.aborted) continue;
    if (gc.metric < best) {
      best = gc.metric;
      result.best_index = idx;
    }
  }
  return result;
}

std::size_t env_thread_count() {
  const char* env = std::getenv("LIONLAB_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v > 1 ? static_cast<std::size_t>(v) : 1;
}

}  // namespace lionlab

#include "lionlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "harness_internal.hpp"
#include "json.hpp"
#include "lionlab/version.hpp"

namespace lionlab::io {

using nlohmann::json;

namespace {

std::string file_header(const std::string& hash) {
  return std::string("# lionlab ") + kVersion + " config=" + hash + "\n";
}

json opt_to_json(const std::optional<double>& v) {
  if (v) return json(*v);
  return json();
}

void base_json_fields(json& j, const std::string& hash) {
  j["tool_version"] = kVersion;
  j["config_hash"] = hash;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for read: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string run_csv(const RunLog& log) {
  std::string out = file_header(log.summary.config_hash);
  out += "t,train_loss,test_loss,l1_grad_norm,w_norm,branch\n";
  for (const RunRow& r : log.rows) {
    out += std::to_string(r.t);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.test_loss);
    out += ',';
    out += format_double(r.l1_grad);
    out += ',';
    out += format_double(r.w_norm);
    out += ',';
    out += branch_name(r.branch);
    out += '\n';
  }
  return out;
}

std::string run_summary_json(const RunConfig& cfg, const RunLog& log) {
  json j;
  base_json_fields(j, log.summary.config_hash);
  j["config"] = json::parse(run_config_to_json(cfg));
  json s;
  s["final_train_loss"] = log.summary.final_train_loss;
  s["final_test_loss"] = log.summary.final_test_loss;
  s["final_l1_grad"] = log.summary.final_l1_grad;
  s["avg_l1_grad_recorded"] = log.summary.avg_l1_grad_recorded;
  s["branch_fraction"] = log.summary.branch_fraction;
  s["aborted"] = log.summary.aborted;
  s["abort_step"] = log.summary.abort_step;
  s["eta"] = log.summary.eta;
  s["beta1"] = log.summary.beta1;
  s["beta2"] = log.summary.beta2;
  s["lambda"] = log.summary.lambda;
  s["warnings"] = log.summary.warnings;
  j["summary"] = s;
  j["w_final"] = log.w_final;
  return j.dump(2) + "\n";
}

std::string grid_csv(const GridResult& grid, const std::string& hash) {
  std::string out = file_header(hash);
  for (const std::string& p : grid.axis_paths) {
    out += p;
    out += ',';
  }
  out += "config_hash,metric,final_train_loss,final_test_loss,status,best\n";
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const GridCell& c = grid.cells[i];
    for (const AxisValue& v : c.values) {
      if (std::holds_alternative<double>(v)) {
        out += format_double(std::get<double>(v));
      } else {
        out += std::get<std::string>(v);
      }
      out += ',';
    }
    out += c.config_hash;
    out += ',';
    out += c.aborted ? "nan" : format_double(c.metric);
    out += ',';
    out += c.aborted ? "nan" : format_double(c.final_train_loss);
    out += ',';
    out += c.aborted ? "nan" : format_double(c.final_test_loss);
    out += ',';
    out += c.aborted ? "aborted" : "ok";
    out += ',';
    out += (!grid.all_aborted && i == grid.best_index) ? "1" : "0";
    out += '\n';
  }
  return out;
}

std::string grid_json(const GridResult& grid, const std::string& hash) {
  json j;
  base_json_fields(j, hash);
  j["axis_paths"] = grid.axis_paths;
  j["all_aborted"] = grid.all_aborted;
  if (!grid.all_aborted) {
    j["best_index"] = grid.best_index;
    j["best_hash"] = grid.cells[grid.best_index].config_hash;
  }
  json cells = json::array();
  for (const GridCell& c : grid.cells) {
    json jc;
    json vals = json::array();
    for (const AxisValue& v : c.values) {
      if (std::holds_alternative<double>(v)) {
        vals.push_back(std::get<double>(v));
      } else {
        vals.push_back(std::get<std::string>(v));
      }
    }
    jc["values"] = vals;
    jc["config_hash"] = c.config_hash;
    jc["aborted"] = c.aborted;
    if (!c.aborted) {
      jc["metric"] = c.metric;
      jc["final_train_loss"] = c.final_train_loss;
      jc["final_test_loss"] = c.final_test_loss;
    }
    cells.push_back(jc);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string stability_curve_csv(const StabilityReport& rep, const std::string& hash) {
  std::string out = file_header(hash);
  out += "t,divergence,momentum_divergence,direction_gap\n";
  for (std::size_t t = 0; t < rep.divergence.size(); ++t) {
    out += std::to_string(t);
    out += ',';
    out += format_double(rep.divergence[t]);
    out += ',';
    out += format_double(rep.momentum_divergence[t]);
    out += ',';
    out += t == 0 ? "" : format_double(rep.direction_gap[t - 1]);
    out += '\n';
  }
  return out;
}

std::string stability_summary_json(const StabilityReport& rep, const std::string& hash,
                                   std::size_t steps) {
  json j;
  base_json_fields(j, hash);
  j["steps"] = steps;
  j["final_divergence"] = rep.final_divergence;
  j["gap_estimate"] = rep.gap_estimate;
  j["tau_joint"] = opt_to_json(rep.tau_joint);
  j["tau_skipped"] = rep.tau_skipped;
  j["tau_base"] = opt_to_json(rep.tau_base);
  j["tau_replaced"] = opt_to_json(rep.tau_replaced);
  j["zero_divergence"] = rep.zero_divergence;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepResult& res, const std::string& hash) {
  std::string out = file_header(hash);
  out += "n,mean_divergence,replicates,zero_count\n";
  for (const SweepPoint& p : res.points) {
    out += std::to_string(p.n);
    out += ',';
    out += format_double(p.mean_divergence);
    out += ',';
    out += std::to_string(p.replicates);
    out += ',';
    out += std::to_string(p.zero_count);
    out += '\n';
  }
  return out;
}

std::string sweep_json(const SweepResult& res, const std::string& hash) {
  json j;
  base_json_fields(j, hash);
  j["slope"] = res.degenerate ? json() : json(res.slope);
  j["slope_stderr"] = res.degenerate ? json() : json(res.slope_stderr);
  j["tau_joint"] = opt_to_json(res.tau_joint_min);
  j["degenerate"] = res.degenerate;
  j["note"] = res.note;
  json pts = json::array();
  for (const SweepPoint& p : res.points) {
    pts.push_back({{"n", p.n},
                   {"mean_divergence", p.mean_divergence},
                   {"replicates", p.replicates},
                   {"zero_count", p.zero_count}});
  }
  j["points"] = pts;
  return j.dump(2) + "\n";
}

std::string diagnostics_json(const DiagnoseReport& rep) {
  json j;
  base_json_fields(j, rep.config_hash);
  j["steps"] = rep.steps;
  j["replicates"] = rep.replicates;
  j["tau"] = opt_to_json(rep.tau);
  j["tau_skipped_steps"] = rep.tau_skipped;
  j["nu"] = rep.nu;
  j["nu0_estimate"] = opt_to_json(rep.nu0);
  // the l1 rate needs nu0 of order 1/sqrt(d); flagged, not asserted
  j["nu0_floor_inv_sqrt_d"] = rep.nu0_floor;
  j["nu0_below_floor"] = rep.nu0 ? json(*rep.nu0 < rep.nu0_floor) : json();
  j["branch_fraction"] = rep.branch_fraction;
  j["avg_l1_grad_final"] = rep.avg_l1.empty() ? json() : json(rep.avg_l1.back());
  j["avg_l1_grad_final_replicate_mean"] = rep.avg_l1_final_mean;
  j["G"] = {{"value", rep.g_used}, {"empirical", rep.g_empirical}};
  // The population gradient is not available; the reported metrics use the
  // full empirical gradient in its place.
  j["gradient_proxy"] = "empirical_full_gradient";
  j["lemma1"] = {{"checked_pairs", rep.lemma1_checked},
                 {"violation_count", rep.lemma1_violations},
                 {"worst_margin", rep.lemma1_worst_margin}};
  j["lemmaC1"] = {{"checked_pairs", rep.lemmaC1_checked},
                  {"violation_count", rep.lemmaC1_violations},
                  {"worst_margin", rep.lemmaC1_worst_margin}};
  if (rep.lemma2_ran) {
    json l2;
    l2["preconditions_ok"] = rep.lemma2.preconditions_ok;
    l2["note"] = rep.lemma2.precondition_note;
    l2["checked_steps"] = rep.lemma2.checked_steps;
    l2["violation_count"] = rep.lemma2.violations.size();
    json v = json::array();
    for (const Lemma2Violation& viol : rep.lemma2.violations) {
      v.push_back({{"step", viol.step},
                   {"which", viol.which},
                   {"lhs", viol.lhs},
                   {"rhs", viol.rhs}});
    }
    l2["violations"] = v;
    j["lemma2"] = l2;
  }
  if (rep.lemma3_ran) {
    j["lemma3"] = {{"lhs", rep.lemma3.lhs},
                   {"rhs", rep.lemma3.rhs},
                   {"ok", rep.lemma3.ok},
                   {"horizon", rep.lemma3.horizon},
                   {"sigma", rep.sigma_used},
                   {"L", rep.l_used},
                   {"Ghat", rep.lemma3.g_hat}};
  }
  return j.dump(2) + "\n";
}

std::string diagnostics_curve_csv(const DiagnoseReport& rep) {
  std::string out = file_header(rep.config_hash);
  out += "t,avg_l1_grad\n";
  for (std::size_t t = 0; t < rep.avg_l1.size(); ++t) {
    out += std::to_string(t + 1);
    out += ',';
    out += format_double(rep.avg_l1[t]);
    out += '\n';
  }
  return out;
}

std::string compare_csv(const CompareResult& res, const std::string& hash) {
  std::string out = file_header(hash);
  out +=
      "label,method,config_hash,eta,beta1,beta2,lambda,nu,branch_fraction,"
      "final_train_loss,final_test_loss,avg_l1_grad,wall_seconds,status\n";
  for (const CompareRow& r : res.rows) {
    out += r.label;
    out += ',';
    out += r.method;
    out += ',';
    out += r.config_hash;
    out += ',';
    out += format_double(r.eta);
    out += ',';
    out += format_double(r.beta1);
    out += ',';
    out += format_double(r.beta2);
    out += ',';
    out += format_double(r.lambda);
    out += ',';
    out += format_double(r.nu);
    out += ',';
    out += format_double(r.branch_fraction);
    out += ',';
    out += format_double(r.final_train_loss);
    out += ',';
    out += format_double(r.final_test_loss);
    out += ',';
    out += format_double(r.avg_l1_grad);
    out += ',';
    out += format_double(r.wall_seconds);
    out += ',';
    out += r.aborted ? "aborted" : "ok";
    out += '\n';
  }
  return out;
}

std::string compare_curves_csv(const CompareResult& res, const std::string& hash) {
  std::string out = file_header(hash);
  out += "label,t,train_loss,test_loss,l1_grad_norm\n";
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const std::string& label = res.rows[i].label;
    for (const RunRow& r : res.winner_logs[i].rows) {
      out += label;
      out += ',';
      out += std::to_string(r.t);
      out += ',';
      out += format_double(r.train_loss);
      out += ',';
      out += format_double(r.test_loss);
      out += ',';
      out += format_double(r.l1_grad);
      out += '\n';
    }
  }
  return out;
}

}  // namespace lionlab::io

#include "avgcn/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "avgcn/error.hpp"
#include "json.hpp"

namespace avgcn::eval {

using nlohmann::json;

namespace {

void require_same_length(std::span<const Vec2> a, std::span<const Vec2> b, const char* what) {
  if (a.size() != b.size())
    throw ContractError(std::string(what) + ": " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + " steps");
  if (a.empty()) throw ContractError(std::string(what) + ": empty trajectory");
}

bool same_name(const std::string& a, const std::string& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) ==
           std::tolower(static_cast<unsigned char>(y));
  });
}

}  // namespace

double ade(std::span<const Vec2> predicted, std::span<const Vec2> truth) {
  require_same_length(predicted, truth, "ade");
  double acc = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) acc += distance(predicted[t], truth[t]);
  return acc / static_cast<double>(truth.size());
}

double fde(std::span<const Vec2> predicted, std::span<const Vec2> truth) {
  require_same_length(predicted, truth, "fde");
  return distance(predicted.back(), truth.back());
}

DisplacementError best_of_k(const std::vector<std::vector<Vec2>>& samples,
                            std::span<const Vec2> truth) {
  if (samples.empty()) throw ContractError("best_of_k: k must be >= 1");
  DisplacementError best{std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()};
  for (const auto& s : samples) {
    best.ade = std::min(best.ade, ade(s, truth));
    best.fde = std::min(best.fde, fde(s, truth));
  }
  return best;
}

std::vector<std::vector<Vec2>> constant_velocity_baseline(const traj::SceneWindow& window) {
  std::vector<std::vector<Vec2>> out;
  for (const auto& p : window.pedestrians)
    out.emplace_back(window.t_pred, p.velocity_at_obs * traj::kStepSeconds);
  return out;
}

std::vector<Vec2> ground_truth_future(const traj::SceneWindow& window, std::size_t i) {
  const auto& pos = window.pedestrians.at(i).abs_positions;
  return {pos.begin() + static_cast<std::ptrdiff_t>(window.t_obs), pos.end()};
}

Vec2 last_observed_position(const traj::SceneWindow& window, std::size_t i) {
  return window.pedestrians.at(i).abs_positions[window.t_obs - 1];
}

EvalSummary evaluate(const std::vector<traj::SceneWindow>& windows,
                     const predictor::PredictorParams& params,
                     const predictor::ArmConfig& arm,
                     const attention::AttentionNetParams* attention_params,
                     std::size_t k, std::uint64_t seed) {
  if (windows.empty()) throw ContractError("evaluate: no windows");
  EvalSummary s;
  const num::Rng root(seed);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    const auto a = predictor::attention_matrix(win, arm, attention_params);
    const auto set = predictor::predict(win, params, a, root.fork(w), {k, 0.0});
    const auto cv = constant_velocity_baseline(win);
    for (std::size_t i = 0; i < win.size(); ++i) {
      const Vec2 origin = last_observed_position(win, i);
      const auto truth = ground_truth_future(win, i);
      std::vector<std::vector<Vec2>> abs;
      for (const auto& sample : set.pedestrians[i].samples)
        abs.push_back(predictor::to_absolute(origin, sample));
      const auto best = best_of_k(abs, truth);
      s.model.ade += best.ade;
      s.model.fde += best.fde;
      const auto base = predictor::to_absolute(origin, cv[i]);
      s.baseline.ade += ade(base, truth);
      s.baseline.fde += fde(base, truth);
      ++s.pedestrians;
    }
    ++s.windows;
  }
  const double n = static_cast<double>(s.pedestrians);
  s.model.ade /= n;
  s.model.fde /= n;
  s.baseline.ade /= n;
  s.baseline.fde /= n;
  return s;
}

void MetricReport::recompute_average() {
  average = {};
  baseline_average = {};
  if (rows.empty()) return;
  for (const auto& r : rows) {
    average.ade += r.model.ade;
    average.fde += r.model.fde;
    baseline_average.ade += r.baseline.ade;
    baseline_average.fde += r.baseline.fde;
  }
  const double n = static_cast<double>(rows.size());
  average.ade /= n;
  average.fde /= n;
  baseline_average.ade /= n;
  baseline_average.fde /= n;
}

namespace {

json error_json(const DisplacementError& e) { return {{"ade", e.ade}, {"fde", e.fde}}; }

}  // namespace

std::string MetricReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"dataset", r.dataset},
                         {"model", error_json(r.model)},
                         {"constant_velocity", error_json(r.baseline)},
                         {"windows", r.windows},
                         {"pedestrians", r.pedestrians}});
  }
  json j = {{"format_version", kReportVersion},
            {"arm", arm},
            {"k", k},
            {"seeds", seeds},
            {"rows", rows_json},
            {"average", {{"model", error_json(average)},
                         {"constant_velocity", error_json(baseline_average)}}}};
  return j.dump(2) + "\n";
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "arm %s  k=%zu  seeds=%zu\n", arm.c_str(), k, seeds.size());
  out << buf;
  std::snprintf(buf, sizeof buf, "%-8s %8s %8s %8s %8s %8s\n", "dataset", "ADE", "FDE",
                "CV-ADE", "CV-FDE", "peds");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-8s %8.3f %8.3f %8.3f %8.3f %8zu\n", r.dataset.c_str(),
                  r.model.ade, r.model.fde, r.baseline.ade, r.baseline.fde, r.pedestrians);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-8s %8.3f %8.3f %8.3f %8.3f\n", "AVG", average.ade,
                average.fde, baseline_average.ade, baseline_average.fde);
  out << buf;
  return out.str();
}

std::vector<std::string> validate_report(const std::string& text) {
  std::vector<std::string> problems;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  auto check_error = [&](const json& e, const std::string& where) {
    if (!e.is_object() || e.size() != 2) {
      problems.push_back(where + ": expected {ade, fde}");
      return;
    }
    for (const char* key : {"ade", "fde"}) {
      if (!e.contains(key) || !e[key].is_number())
        problems.push_back(where + "." + key + ": missing or not a number");
      else if (!(e[key].get<double>() >= 0.0))
        problems.push_back(where + "." + key + ": must be >= 0");
    }
  };
  if (!j.is_object()) return {"report must be an object"};
  const std::vector<std::string> keys{"format_version", "arm", "k", "seeds", "rows", "average"};
  for (const auto& [key, _] : j.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      problems.push_back(key + ": unknown key");
  for (const auto& key : keys)
    if (!j.contains(key)) problems.push_back(key + ": missing");
  if (!problems.empty()) return problems;

  if (j["format_version"] != kReportVersion) problems.push_back("format_version: unsupported");
  static const std::vector<std::string> arms{"GCN", "AGCN", "VGCN", "AVGCN"};
  if (!j["arm"].is_string() ||
      std::find(arms.begin(), arms.end(), j["arm"].get<std::string>()) == arms.end())
    problems.push_back("arm: must be one of GCN, AGCN, VGCN, AVGCN");
  if (!j["k"].is_number_unsigned() || j["k"].get<std::size_t>() < 1)
    problems.push_back("k: must be a positive integer");
  if (!j["seeds"].is_array() || j["seeds"].empty())
    problems.push_back("seeds: must be a non-empty array");
  if (!j["rows"].is_array()) {
    problems.push_back("rows: must be an array");
    return problems;
  }
  double sum_ade = 0.0, sum_fde = 0.0;
  for (std::size_t i = 0; i < j["rows"].size(); ++i) {
    const json& r = j["rows"][i];
    const std::string where = "rows[" + std::to_string(i) + "]";
    if (!r.is_object() || !r.contains("dataset") || !r["dataset"].is_string() ||
        !r.contains("model") || !r.contains("constant_velocity") || !r.contains("windows") ||
        !r.contains("pedestrians") || r.size() != 5) {
      problems.push_back(where + ": expected dataset, model, constant_velocity, windows, pedestrians");
      continue;
    }
    check_error(r["model"], where + ".model");
    check_error(r["constant_velocity"], where + ".constant_velocity");
    if (r["model"].contains("ade") && r["model"]["ade"].is_number()) {
      sum_ade += r["model"]["ade"].get<double>();
      sum_fde += r["model"].value("fde", 0.0);
    }
  }
  const json& avg = j["average"];
  if (!avg.is_object() || !avg.contains("model") || !avg.contains("constant_velocity")) {
    problems.push_back("average: expected model and constant_velocity");
  } else {
    check_error(avg["model"], "average.model");
    check_error(avg["constant_velocity"], "average.constant_velocity");
    const std::size_t n = j["rows"].size();
    if (problems.empty() && n > 0) {
      const double a = avg["model"]["ade"].get<double>();
      const double f = avg["model"]["fde"].get<double>();
      if (std::abs(a - sum_ade / static_cast<double>(n)) > 1e-9 ||
          std::abs(f - sum_fde / static_cast<double>(n)) > 1e-9)
        problems.push_back("average.model: not the mean of the rows");
    }
  }
  return problems;
}

MetricReport parse_report(const std::string& text) {
  const auto problems = validate_report(text);
  if (!problems.empty()) throw DataError("invalid report: " + problems.front());
  const json j = json::parse(text);
  MetricReport r;
  r.arm = j["arm"].get<std::string>();
  r.k = j["k"].get<std::size_t>();
  r.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  auto err = [](const json& e) {
    return DisplacementError{e["ade"].get<double>(), e["fde"].get<double>()};
  };
  for (const json& row : j["rows"])
    r.rows.push_back({row["dataset"].get<std::string>(), err(row["model"]),
                      err(row["constant_velocity"]), row["windows"].get<std::size_t>(),
                      row["pedestrians"].get<std::size_t>()});
  r.average = err(j["average"]["model"]);
  r.baseline_average = err(j["average"]["constant_velocity"]);
  return r;
}

MetricReport run_experiment(const std::vector<traj::Dataset>& datasets,
                            const ExperimentConfig& config,
                            const attention::AttentionNetParams* attention_params) {
  if (config.arm.source == predictor::AttentionSource::Learned && attention_params == nullptr)
    throw ConfigError("arm " + predictor::arm_name(config.arm) +
                      " needs a trained attention checkpoint");
  if (config.held_out.empty()) throw ConfigError("no held-out dataset given");
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");

  MetricReport report;
  report.arm = predictor::arm_name(config.arm);
  report.k = config.k;
  report.seeds = config.seeds;
  for (const auto& held : config.held_out) {
    const traj::Split split =
        traj::leave_one_out_split(datasets, held, config.validation_fraction);
    if (split.test.empty()) throw DataError("held-out dataset " + held + " has no windows");
    ReportRow row;
    row.dataset = held;
    for (const auto& d : datasets)
      if (same_name(d.name, held)) row.dataset = d.name;
    const auto prepared = predictor::prepare(split.train, config.arm, attention_params);
    for (std::uint64_t seed : config.seeds) {
      predictor::PredictorTrainConfig tc = config.train;
      tc.seed = seed;
      const auto trained = predictor::train(prepared, tc);
      const auto s = evaluate(split.test, trained.params, config.arm, attention_params,
                              config.k, seed);
      row.model.ade += s.model.ade;
      row.model.fde += s.model.fde;
      row.baseline = s.baseline;
      row.windows = s.windows;
      row.pedestrians = s.pedestrians;
    }
    row.model.ade /= static_cast<double>(config.seeds.size());
    row.model.fde /= static_cast<double>(config.seeds.size());
    report.rows.push_back(row);
  }
  report.recompute_average();
  return report;
}

}  // namespace avgcn::eval

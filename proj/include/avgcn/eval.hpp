#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "avgcn/geometry.hpp"
#include "avgcn/predictor.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::eval {

/// Mean Euclidean distance over all steps.
double ade(std::span<const Vec2> predicted, std::span<const Vec2> truth);
/// Euclidean distance at the last step.
double fde(std::span<const Vec2> predicted, std::span<const Vec2> truth);

struct DisplacementError {
  double ade = 0.0;
  double fde = 0.0;
};

/// Minimum ADE and minimum FDE over samples, each taken independently.
DisplacementError best_of_k(const std::vector<std::vector<Vec2>>& samples,
                            std::span<const Vec2> truth);

/// Per-pedestrian displacements repeating the last observed step.
std::vector<std::vector<Vec2>> constant_velocity_baseline(const traj::SceneWindow& window);

/// Future absolute positions of pedestrian i.
std::vector<Vec2> ground_truth_future(const traj::SceneWindow& window, std::size_t i);
/// Absolute position of pedestrian i at the last observed step.
Vec2 last_observed_position(const traj::SceneWindow& window, std::size_t i);

struct EvalSummary {
  DisplacementError model;
  DisplacementError baseline;  // constant velocity
  std::size_t windows = 0;
  std::size_t pedestrians = 0;
};

/// Best-of-k errors averaged over every pedestrian of every window.
EvalSummary evaluate(const std::vector<traj::SceneWindow>& windows,
                     const predictor::PredictorParams& params,
                     const predictor::ArmConfig& arm,
                     const attention::AttentionNetParams* attention_params,
                     std::size_t k, std::uint64_t seed);

struct ReportRow {
  std::string dataset;
  DisplacementError model;
  DisplacementError baseline;
  std::size_t windows = 0;
  std::size_t pedestrians = 0;
};

inline constexpr int kReportVersion = 1;

struct MetricReport {
  std::string arm;
  std::size_t k = 20;
  std::vector<std::uint64_t> seeds;
  std::vector<ReportRow> rows;
  /// Unweighted mean over rows.
  DisplacementError average;
  DisplacementError baseline_average;

  void recompute_average();
  std::string to_json() const;
  std::string to_table() const;
};

MetricReport parse_report(const std::string& json);

/// Returns an empty list when the report text is well formed; otherwise one
/// message per problem.
std::vector<std::string> validate_report(const std::string& json);

struct ExperimentConfig {
  predictor::ArmConfig arm;
  std::vector<std::string> held_out;  // one fold per entry
  std::vector<std::uint64_t> seeds{0};
  std::size_t k = 20;
  double validation_fraction = 0.1;
  predictor::PredictorTrainConfig train;
};

/// Trains the arm's predictor for every held-out fold and seed and evaluates
/// on the held-out test windows. Rows average over seeds.
MetricReport run_experiment(const std::vector<traj::Dataset>& datasets,
                            const ExperimentConfig& config,
                            const attention::AttentionNetParams* attention_params);

}  // namespace avgcn::eval

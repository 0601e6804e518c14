#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vf/generator.hpp"
#include "vf/metrics.hpp"
#include "vf/petri.hpp"
#include "vf/sampler.hpp"
#include "vf/split.hpp"

namespace vf {

enum class Rq { rq1, rq2, rq3 };

Rq rq_from_string(const std::string& s);
std::string to_string(Rq rq);

struct SystemRef {
  std::string id;
  std::string net_path;  // resolved against cwd, then $VF_DATA_DIR
};

struct GeneratorChoice {
  enum class Kind { adversarial, markov } kind = Kind::adversarial;
  GeneratorConfig config;  // beta overridden per grid point
  int markov_order = 2;
  double markov_smoothing = 0.0;
};

// A sweep over one research-question grid. Defaults mirror the k grid
// (1000 then 2000..20000 step 2000), the ratio grid (0.1..0.7), the bias
// grid (baseline plus b1..b4), and the beta grid {100, 1000}.
struct ExperimentPlan {
  std::vector<SystemRef> systems;
  Rq rq = Rq::rq1;
  std::vector<int> k_grid = {1000, 2000,  4000,  6000,  8000,  10000,
                             12000, 14000, 16000, 18000, 20000};
  std::vector<double> ratio_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<std::string> bias_grid = {"baseline", "b1", "b2", "b3", "b4"};
  std::vector<double> beta_grid = {100.0, 1000.0};
  std::uint64_t base_seed = 0;
  int replicates = 1;
  int fixed_k = 10000;            // k used by RQ2/RQ3 points
  std::string sample_mode = "naive";  // naive | mh
  bool nested_k_draws = true;     // RQ1: k-sweep draw streams nest
  GeneratorChoice generator;
  PlayoutConfig playout;
  SplitOptions split_options;
};

ExperimentPlan plan_from_json_file(const std::filesystem::path& path);
ExperimentPlan plan_from_json_text(const std::string& text, const std::string& origin);
std::string plan_to_json_text(const ExperimentPlan& plan);

struct RunRecord {
  std::string system;
  Rq rq = Rq::rq1;
  std::string setup;  // "70/30", "10/90", ..., "baseline", "b1".."b4"
  double beta = 0.0;
  int k = 0;
  std::string mode;  // naive | mh
  std::uint64_t seed = 0;  // sampling seed of this point
  int replicate = 0;
  EvalResult eval;
  std::int64_t wall_ms = 0;
  std::string artifact_hash;
  bool failed = false;
  std::string error;
  // system features carried for regression and plots
  std::size_t system_variants = 0;
  std::size_t system_alphabet = 0;
  std::size_t system_mu = 0;
};

// Executes every grid point (training one generator per (system, split,
// beta, replicate) and re-sampling per k). Per-point failures are recorded,
// never fatal. `jobs` caps worker threads; record order is grid order
// regardless of scheduling.
std::vector<RunRecord> run_plan(const ExperimentPlan& plan, int jobs = 1);

// Trained-generator count implied by the plan grid (structure check).
std::size_t planned_generator_count(const ExperimentPlan& plan);

struct CIResult {
  double mean = 0.0;
  double half_width = 0.0;
  double level = 0.90;
  std::size_t n = 0;
};

// Student-t interval on the mean: mean ± t_{0.95, n-1} * sd / sqrt(n).
CIResult ci90(const std::vector<double>& scores);

enum class FeatureExpansion { linear, quadratic, quadratic_no_cross };

struct RegressionFit {
  std::vector<std::string> feature_names;  // "intercept" first
  Eigen::VectorXd coefficients;
  double r_squared = 0.0;
  bool rank_deficient = false;
};

// Least squares with intercept on standardized (expanded) features;
// R^2 on the training data. Pseudo-inverse solution + flag when rank
// deficient.
RegressionFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      FeatureExpansion expand,
                      std::vector<std::string> base_names = {});

// Emits runs.csv, systems.csv, ci.csv, regression.json, and per-(system,
// beta) curve files for k sweeps. Deterministic bytes for fixed records.
void write_report(const std::vector<RunRecord>& records,
                  const std::filesystem::path& out_dir);

const char* runs_csv_header();
std::string runs_csv_row(const RunRecord& record);

std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path);

// End-to-end single point: playout -> split -> train -> sample -> evaluate,
// with all stage seeds derived from base_seed exactly as the subcommand
// sequence would derive them.
struct PipelineConfig {
  std::string system_id;
  std::string net_path;
  SplitSpec split{RandomRatio{0.7}, 0};
  SplitOptions split_options;
  GeneratorChoice generator;
  std::string sample_mode = "naive";
  int k = 10000;
  std::uint64_t base_seed = 0;
  PlayoutConfig playout;
  MhOptions mh;
};

RunRecord pipeline(const PipelineConfig& cfg);

// Stage-seed derivation shared by pipeline, run_plan, and the CLI.
std::uint64_t stage_seed(std::uint64_t base, const std::string& stage,
                         const std::string& point_label, int replicate = 0);

std::filesystem::path resolve_net_path(const std::string& ref);

std::string setup_label_for_ratio(double ratio);

}  // namespace vf

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillplan/curriculum.hpp"
#include "skillplan/envs.hpp"
#include "skillplan/skills.hpp"

namespace skillplan {

/// Bad configuration file or command-line value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LearnerKind { Tabular, Scripted };

struct ExperimentConfig {
  std::string name = "experiment";
  EnvConfig env;
  std::string domain_file;
  std::map<std::string, std::string> problems;  // goal id -> problem file
  std::string goal = "train";
  std::vector<std::uint64_t> seeds;
  LearnerKind learner = LearnerKind::Tabular;
  Hyperparameters hp;
  SharingMode sharing = SharingMode::PerLiftedOperator;
  CurriculumConfig curriculum;
  std::size_t eval_episodes = 50;  // M
  std::string output_dir = "out";

  std::string transfer_source;  // output directory of the source experiment
  std::vector<std::pair<std::string, std::string>> remap;  // source -> target
  double transfer_ratio = 0.5;

  /// Checks that referenced files exist and that seeds are given.
  void validate() const;
};

/// INI-style text: "[section]" headers and "key = value" lines, ';' or '#'
/// comments. Relative paths resolve against `base_dir`. Unknown sections or
/// keys are errors. See docs/config.md for the grammar and keys.
ExperimentConfig parse_config(std::string_view text,
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// "0-9", "1,4,7" or a mix of both.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

inline constexpr std::string_view kMetricsSchema = "skillplan-metrics/1";

struct MetricRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  std::string subject;  // skill name, goal id or "task"
  std::string metric;
  double value = 0.0;

  bool operator==(const MetricRow&) const = default;
};

/// Append-only metrics rows with a versioned CSV form: a "#schema=" line,
/// then "experiment,seed,iteration,subject,metric,value".
class MetricsTable {
 public:
  void add(MetricRow row);
  const std::vector<MetricRow>& rows() const { return rows_; }
  std::vector<double> values(std::string_view subject,
                             std::string_view metric) const;

  std::string to_csv() const;
  void write(const std::string& path) const;
  /// Throws ConfigError on a missing or foreign schema line or bad rows.
  static MetricsTable parse_csv(std::string_view text);

 private:
  std::vector<MetricRow> rows_;
};

/// Loads the domain and the problem for `goal` and binds them to the
/// configured environment.
TaskContext load_task(const ExperimentConfig& cfg, const std::string& goal);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
  SkillLibrary library;
};

/// Trains one seed from scratch, or from `warm` when given.
SeedRun run_seed(const ExperimentConfig& cfg, const TaskContext& task,
                 std::uint64_t seed, std::optional<SkillLibrary> warm = {});

/// Greedy evaluation: `episodes` plan executions, progress per episode.
/// Fails with DomainError naming the first operator without a trained slot.
std::vector<double> evaluate_goal(const SkillLibrary& library,
                                  const TaskContext& task, std::uint64_t seed,
                                  std::size_t episodes);

/// Copies source slots onto target operators. Each target operator's
/// abstract signature must match the source layout slot by slot.
SkillLibrary remap_library(
    const SkillLibrary& source, const TaskContext& target,
    const std::vector<std::pair<std::string, std::string>>& remap);

std::string seed_dir(const ExperimentConfig& cfg, std::uint64_t seed);

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNotConverged = 2 };

/// Prints the plan, or "UNSOLVABLE".
int cmd_plan(const std::string& domain_file, const std::string& problem_file,
             std::ostream& out);
/// Writes checkpoints and training logs per seed plus train_metrics.csv.
int cmd_train(const ExperimentConfig& cfg, std::ostream& log);
/// Reads checkpoints written by cmd_train; writes eval_metrics.csv only.
int cmd_eval(const ExperimentConfig& cfg, std::ostream& log);
/// Cold versus warm-started training; writes transfer_metrics.csv.
int cmd_transfer(const ExperimentConfig& cfg, std::ostream& log);

double median(std::vector<double> v);

}  // namespace skillplan

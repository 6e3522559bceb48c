// Command-line driver: plan, train, eval, transfer.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "skillplan/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::string domain;
  std::string goal;
  std::string seeds;
  std::string out;
  std::string domain_file;
  std::string problem_file;
};

skillplan::ExperimentConfig resolve_config(const Options& o) {
  std::string path = o.config;
  if (path.empty()) {
    if (o.domain.empty()) {
      throw skillplan::ConfigError("give --config or --domain");
    }
    path = (std::filesystem::path(SKILLPLAN_CONFIG_DIR) / (o.domain + ".ini")).string();
  }
  auto cfg = skillplan::load_config(path);
  if (!o.domain.empty() && skillplan::parse_domain_id(o.domain) != cfg.env.domain) {
    throw skillplan::ConfigError("--domain " + o.domain + " disagrees with " + path);
  }
  if (!o.goal.empty()) cfg.goal = o.goal;
  if (!o.seeds.empty()) cfg.seeds = skillplan::parse_seed_list(o.seeds);
  if (const char* env = std::getenv("OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

void experiment_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config file");
  cmd->add_option("--domain", o.domain, "drawer, peg or coffee; picks the bundled config");
  cmd->add_option("--goal", o.goal, "train, test1 or test2");
  cmd->add_option("--seeds", o.seeds, "seed list, e.g. 0-9 or 1,3,5");
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skill learning with a symbolic planner as curriculum"};
  app.require_subcommand(1);
  Options o;

  auto* plan = app.add_subcommand("plan", "print a plan for a domain and problem file");
  plan->add_option("domain_file", o.domain_file, "PDDL domain");
  plan->add_option("problem_file", o.problem_file, "PDDL problem");
  experiment_flags(plan, o);

  auto* train = app.add_subcommand("train", "train skills with the planner curriculum");
  experiment_flags(train, o);
  auto* eval = app.add_subcommand("eval", "evaluate trained skills on every goal");
  experiment_flags(eval, o);
  auto* transfer = app.add_subcommand("transfer", "cold versus warm-started training");
  experiment_flags(transfer, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : skillplan::kExitUsage;
  }

  try {
    if (plan->parsed()) {
      if (o.domain_file.empty() || o.problem_file.empty()) {
        auto cfg = resolve_config(o);
        o.domain_file = cfg.domain_file;
        o.problem_file = cfg.problems.at(cfg.goal);
      }
      return skillplan::cmd_plan(o.domain_file, o.problem_file, std::cout);
    }
    const auto cfg = resolve_config(o);
    if (train->parsed()) return skillplan::cmd_train(cfg, std::cerr);
    if (eval->parsed()) return skillplan::cmd_eval(cfg, std::cerr);
    return skillplan::cmd_transfer(cfg, std::cerr);
  } catch (const skillplan::ParseError& e) {
    std::cerr << "parse error at " << e.line() << ":" << e.column() << ": "
              << e.message();
    if (!e.token().empty()) std::cerr << " near '" << e.token() << "'";
    std::cerr << "\n";
  } catch (const std::out_of_range&) {
    std::cerr << "error: no problem file for goal '" << o.goal << "'\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return skillplan::kExitUsage;
}

// rlmpc_lab: command-line driver over the rlmpc C API.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "rlmpc/rlmpc.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int report(rlmpc_status st) {
  if (st == RLMPC_OK) return 0;
  std::fprintf(stderr, "rlmpc_lab: %s: %s\n", rlmpc_status_name(st), rlmpc_last_error());
  return rlmpc_status_is_usage_error(st) ? kExitConfig : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotary inverted pendulum: MPC, NNMPC and RL-corrected MPC experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string controller = "mpc";
  long long seed = -1;
  bool resume = false;
  std::string out_dir;
  int verbosity = 1;

  app.add_option("--config", config_path, "Run configuration file")->required();
  app.add_option("--controller", controller, "Controller or RL mode")
      ->check(CLI::IsMember({"mpc", "drmpc", "nnmpc", "warmstart", "rlmpc"}));
  app.add_option("--seed", seed, "Seed overriding run.seed")->check(CLI::NonNegativeNumber);
  app.add_flag("--resume", resume, "Continue RL training from the latest checkpoint");
  app.add_option("--out", out_dir, "Output directory overriding run.out");
  app.add_flag_callback("-q,--quiet", [&] { verbosity = 0; }, "Only errors");
  app.add_flag_callback("-v,--verbose", [&] { verbosity = 2; }, "Per-episode progress");

  auto* simulate = app.add_subcommand("simulate", "Closed-loop rollout of one controller");
  auto* dataset = app.add_subcommand("dataset", "Generate the NNMPC imitation dataset");
  auto* train_nnmpc = app.add_subcommand("train-nnmpc", "Fit the NNMPC network");
  auto* pretrain = app.add_subcommand("pretrain-critic", "Pre-train the critic on the nominal plant");
  auto* train_rl = app.add_subcommand("train-rlmpc", "Train the RL policy on the perturbed plant");
  auto* evaluate = app.add_subcommand("evaluate", "Cost tables on nominal and perturbed plants");
  auto* benchmark = app.add_subcommand("benchmark", "Per-step runtime of every available controller");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  rlmpc_set_log_level(verbosity);
  rlmpc_config* cfg = nullptr;
  if (const int rc = report(rlmpc_config_load(config_path.c_str(), &cfg)); rc != 0) return rc;
  rlmpc_status st = RLMPC_OK;
  if (seed >= 0) st = rlmpc_config_set(cfg, "run.seed", std::to_string(seed).c_str());
  if (st == RLMPC_OK && !out_dir.empty()) st = rlmpc_config_set(cfg, "run.out", out_dir.c_str());

  const bool rl_mode = controller == "warmstart" || controller == "rlmpc";
  const char* mode = controller == "warmstart" ? "warmstart" : "rlmpc";
  if (st == RLMPC_OK) {
    if (simulate->parsed()) {
      st = rlmpc_cmd_simulate(cfg, controller.c_str());
    } else if (dataset->parsed()) {
      st = rlmpc_cmd_dataset(cfg);
    } else if (train_nnmpc->parsed()) {
      st = rlmpc_cmd_train_nnmpc(cfg);
    } else if (pretrain->parsed() || train_rl->parsed()) {
      if (app.count("--controller") > 0 && !rl_mode) {
        std::fprintf(stderr, "rlmpc_lab: --controller must be warmstart or rlmpc for RL training\n");
        rlmpc_config_free(cfg);
        return kExitConfig;
      }
      st = pretrain->parsed() ? rlmpc_cmd_pretrain_critic(cfg, mode) : rlmpc_cmd_train_rlmpc(cfg, mode, resume);
    } else if (evaluate->parsed()) {
      st = rlmpc_cmd_evaluate(cfg);
    } else if (benchmark->parsed()) {
      st = rlmpc_cmd_benchmark(cfg);
    }
  }
  const int rc = report(st);
  rlmpc_config_free(cfg);
  return rc;
}

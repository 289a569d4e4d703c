#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/controllers.hpp"
#include "core/ddpg.hpp"
#include "core/mpc.hpp"
#include "core/nnmpc.hpp"
#include "core/plant.hpp"
#include "core/reference.hpp"
#include "core/trainer.hpp"

namespace rlmpc {

// Everything a command needs, read from one key-value file with dotted
// sections (plant., mpc., ref., ddpg., zones., perturb., nnmpc., train.,
// eval., run.).
struct RunConfig {
  std::filesystem::path source;
  std::filesystem::path plant_file;  // empty: built-in QUBE-Servo 2 values
  PendulumParams plant;
  PerturbationSpec perturbation;
  MpcConfig mpc;
  RefTrajectory reference;
  SineFamily family;
  DdpgConfig ddpg;
  ConstraintZones zones;
  DatasetOptions dataset;
  NnmpcTrainOptions nnmpc;
  PretrainOptions pretrain;
  TrainOptions train;
  double episode_seconds = 7.0;
  double sim_duration = 20.0;
  bool sim_perturbed = false;
  double nominal_ts = 0.0, nominal_tf = 20.0;
  double perturbed_ts = 7.0, perturbed_tf = 14.0;
  std::vector<RefTrajectory> nominal_refs;
  std::vector<RefTrajectory> perturbed_refs;
  std::vector<std::string> eval_controllers;
  int bench_steps = 2000;
  int bench_warmup = 200;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  int threads = 1;

  PendulumParams perturbed_plant() const { return perturb(plant, perturbation); }
};

RunConfig load_run_config(const std::filesystem::path& path);
// Relative paths resolve against `base_dir`.
RunConfig make_run_config(const KeyValueFile& file, const std::filesystem::path& base_dir);

// `sine:A:w` entries separated by commas; `A:w` is accepted as shorthand.
std::vector<RefTrajectory> parse_reference_list(const std::string& text);

// runs/<name>/{logs,weights,reports,checkpoints}
struct RunLayout {
  std::filesystem::path root;
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path weights() const { return root / "weights"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path nnmpc_weights() const { return weights() / "nnmpc.txt"; }
  std::filesystem::path dataset_csv() const { return logs() / "nnmpc_dataset.csv"; }
  std::filesystem::path critic_checkpoint(RlmpcVariant v) const;
  std::filesystem::path agent_weights(RlmpcVariant v) const;
  std::filesystem::path training_checkpoints(RlmpcVariant v) const;
  std::filesystem::path reward_log(RlmpcVariant v) const;

  void create() const;
};

// Known ids: mpc, drmpc, nnmpc, warmstart, rlmpc. Learned controllers need
// their weights under `layout`; MissingArtifact otherwise.
std::unique_ptr<Controller> make_controller(const RunConfig& cfg, const RunLayout& layout,
                                            const std::string& id);

RlmpcMode mode_for(RlmpcVariant v);

void cmd_simulate(const RunConfig& cfg, const std::string& controller);
void cmd_dataset(const RunConfig& cfg);
void cmd_train_nnmpc(const RunConfig& cfg);
void cmd_pretrain_critic(const RunConfig& cfg, RlmpcVariant variant);
void cmd_train_rlmpc(const RunConfig& cfg, RlmpcVariant variant, bool resume);
void cmd_evaluate(const RunConfig& cfg);
void cmd_benchmark(const RunConfig& cfg);

}  // namespace rlmpc

#include "rlmpc/rlmpc.h"

#include <exception>
#include <memory>
#include <new>
#include <string>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/log.hpp"
#include "core/pipeline.hpp"

struct rlmpc_config {
  rlmpc::KeyValueFile file;
  std::filesystem::path base_dir;
  rlmpc::RunConfig run;
  std::string out_dir;
};

struct rlmpc_plant {
  rlmpc::PendulumParams params;
};

struct rlmpc_controller {
  std::unique_ptr<rlmpc::Controller> impl;
  rlmpc::RefTrajectory reference;
  double Ts = 0.01;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
rlmpc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return RLMPC_OK;
  } catch (const rlmpc::Error& e) {
    g_last_error = e.what();
    return static_cast<rlmpc_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return RLMPC_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) rlmpc::fail(rlmpc::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

void rebuild(rlmpc_config& c) {
  c.run = rlmpc::make_run_config(c.file, c.base_dir);
  c.out_dir = c.run.out_dir.string();
}

rlmpc::RlmpcVariant variant(const char* mode) {
  return rlmpc::parse_rlmpc_variant(mode == nullptr ? "rlmpc" : mode);
}

}  // namespace

extern "C" {

const char* rlmpc_version(void) { return "0.1.0"; }

const char* rlmpc_last_error(void) { return g_last_error.c_str(); }

const char* rlmpc_status_name(rlmpc_status status) {
  if (status == RLMPC_OK) return "ok";
  if (status == RLMPC_ERR_INTERNAL) return "internal";
  if (status >= RLMPC_ERR_INVALID_ARGUMENT && status <= RLMPC_ERR_MISSING_ARTIFACT) {
    return rlmpc::to_string(static_cast<rlmpc::ErrorCode>(status));
  }
  return "unknown";
}

int rlmpc_status_is_usage_error(rlmpc_status status) {
  return status == RLMPC_ERR_CONFIG || status == RLMPC_ERR_MISSING_ARTIFACT;
}

void rlmpc_set_log_level(int level) {
  rlmpc::log_level() = level <= 0 ? rlmpc::LogLevel::Quiet
                                  : (level == 1 ? rlmpc::LogLevel::Info : rlmpc::LogLevel::Debug);
}

rlmpc_status rlmpc_config_load(const char* path, rlmpc_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    const std::filesystem::path p(path);
    if (!std::filesystem::exists(p)) rlmpc::fail(rlmpc::ErrorCode::Config, "config file not found: " + p.string());
    auto c = std::make_unique<rlmpc_config>();
    c->file = rlmpc::KeyValueFile::load(p);
    c->base_dir = p.parent_path();
    rebuild(*c);
    *out = c.release();
  });
}

rlmpc_status rlmpc_config_parse(const char* text, rlmpc_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<rlmpc_config>();
    c->file = rlmpc::KeyValueFile::parse(text);
    c->base_dir = std::filesystem::current_path();
    rebuild(*c);
    *out = c.release();
  });
}

rlmpc_status rlmpc_config_set(rlmpc_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    rlmpc::KeyValueFile next = cfg->file;
    next.set(key, value);
    rlmpc::RunConfig run = rlmpc::make_run_config(next, cfg->base_dir);
    cfg->file = std::move(next);
    cfg->run = std::move(run);
    cfg->out_dir = cfg->run.out_dir.string();
  });
}

const char* rlmpc_config_out_dir(const rlmpc_config* cfg) { return cfg == nullptr ? "" : cfg->out_dir.c_str(); }

void rlmpc_config_free(rlmpc_config* cfg) { delete cfg; }

rlmpc_status rlmpc_cmd_simulate(const rlmpc_config* cfg, const char* controller) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_simulate(cfg->run, controller == nullptr ? "mpc" : controller);
  });
}

rlmpc_status rlmpc_cmd_dataset(const rlmpc_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_dataset(cfg->run);
  });
}

rlmpc_status rlmpc_cmd_train_nnmpc(const rlmpc_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_train_nnmpc(cfg->run);
  });
}

rlmpc_status rlmpc_cmd_pretrain_critic(const rlmpc_config* cfg, const char* mode) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_pretrain_critic(cfg->run, variant(mode));
  });
}

rlmpc_status rlmpc_cmd_train_rlmpc(const rlmpc_config* cfg, const char* mode, int resume) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_train_rlmpc(cfg->run, variant(mode), resume != 0);
  });
}

rlmpc_status rlmpc_cmd_evaluate(const rlmpc_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_evaluate(cfg->run);
  });
}

rlmpc_status rlmpc_cmd_benchmark(const rlmpc_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    rlmpc::cmd_benchmark(cfg->run);
  });
}

rlmpc_status rlmpc_plant_create(const rlmpc_config* cfg, int perturbed, rlmpc_plant** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = new rlmpc_plant{perturbed ? cfg->run.perturbed_plant() : cfg->run.plant};
  });
}

rlmpc_status rlmpc_plant_step(const rlmpc_plant* plant, const double x[4], double u, double dt,
                              double x_next[4]) {
  return guarded([&] {
    need(plant, "plant");
    need(x, "x");
    need(x_next, "x_next");
    if (!(dt > 0.0)) rlmpc::fail(rlmpc::ErrorCode::InvalidArgument, "dt must be positive");
    const rlmpc::State s(Eigen::Vector4d(x[0], x[1], x[2], x[3]));
    const rlmpc::State n = rlmpc::simulate_interval(plant->params, s, u, dt);
    for (int i = 0; i < 4; ++i) x_next[i] = n[i];
  });
}

rlmpc_status rlmpc_plant_derivative(const rlmpc_plant* plant, const double x[4], double u, double dx[4]) {
  return guarded([&] {
    need(plant, "plant");
    need(x, "x");
    need(dx, "dx");
    const Eigen::Vector4d d = rlmpc::nonlinear_derivative(plant->params, Eigen::Vector4d(x[0], x[1], x[2], x[3]), u);
    for (int i = 0; i < 4; ++i) dx[i] = d[i];
  });
}

void rlmpc_plant_free(rlmpc_plant* plant) { delete plant; }

rlmpc_status rlmpc_controller_create(const rlmpc_config* cfg, const char* id, rlmpc_controller** out) {
  return guarded([&] {
    need(cfg, "config");
    need(id, "id");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<rlmpc_controller>();
    c->impl = rlmpc::make_controller(cfg->run, rlmpc::RunLayout{cfg->run.out_dir}, id);
    c->reference = cfg->run.reference;
    c->Ts = cfg->run.mpc.Ts;
    *out = c.release();
  });
}

rlmpc_status rlmpc_controller_act(const rlmpc_controller* ctrl, const double x[4], long long k, double* u) {
  return guarded([&] {
    need(ctrl, "controller");
    need(x, "x");
    need(u, "u");
    if (k < 0) rlmpc::fail(rlmpc::ErrorCode::InvalidArgument, "step index must be non-negative");
    *u = ctrl->impl->act(rlmpc::State(Eigen::Vector4d(x[0], x[1], x[2], x[3])), ctrl->reference, k);
  });
}

rlmpc_status rlmpc_controller_rollout(const rlmpc_controller* ctrl, const rlmpc_plant* plant, double duration,
                                      double ts, double tf, const char* csv_path, double* j_ac) {
  return guarded([&] {
    need(ctrl, "controller");
    need(plant, "plant");
    need(j_ac, "j_ac");
    const rlmpc::TrajectoryLog log =
        rlmpc::run_controller(*ctrl->impl, plant->params, ctrl->reference, duration, ctrl->Ts);
    if (csv_path != nullptr) rlmpc::save_trajectory_csv(log, csv_path);
    *j_ac = rlmpc::average_cost(log, ts, tf);
  });
}

rlmpc_status rlmpc_controller_benchmark(const rlmpc_controller* ctrl, int n_steps, int warmup, double* mean_s,
                                        double* p50_s, double* p99_s) {
  return guarded([&] {
    need(ctrl, "controller");
    const rlmpc::TimingStats s = rlmpc::benchmark_runtime(*ctrl->impl, n_steps, warmup);
    if (mean_s != nullptr) *mean_s = s.mean_s;
    if (p50_s != nullptr) *p50_s = s.p50_s;
    if (p99_s != nullptr) *p99_s = s.p99_s;
  });
}

void rlmpc_controller_free(rlmpc_controller* ctrl) { delete ctrl; }

}  // extern "C"

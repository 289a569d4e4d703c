/* C interface to the rotary-pendulum RLMPC library. */
#ifndef RLMPC_RLMPC_H
#define RLMPC_RLMPC_H

#include <stddef.h>

#if defined(RLMPC_BUILDING_LIBRARY)
#define RLMPC_API __attribute__((visibility("default")))
#else
#define RLMPC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rlmpc_status {
  RLMPC_OK = 0,
  RLMPC_ERR_INVALID_ARGUMENT = 1,
  RLMPC_ERR_NON_POSITIVE_JT = 2,
  RLMPC_ERR_SINGULAR_MASS_MATRIX = 3,
  RLMPC_ERR_INVALID_PERTURBATION = 4,
  RLMPC_ERR_INDIVISIBLE_SAMPLING = 5,
  RLMPC_ERR_DIMENSION_MISMATCH = 6,
  RLMPC_ERR_NOT_POSITIVE_DEFINITE = 7,
  RLMPC_ERR_STALE_CACHE = 8,
  RLMPC_ERR_EMPTY_DATASET = 9,
  RLMPC_ERR_EMPTY_BATCH = 10,
  RLMPC_ERR_INSUFFICIENT_DATA = 11,
  RLMPC_ERR_WINDOW_OUT_OF_RANGE = 12,
  RLMPC_ERR_RESET_TIMEOUT = 13,
  RLMPC_ERR_HARD_VIOLATION = 14,
  RLMPC_ERR_CONFIG = 15,
  RLMPC_ERR_IO = 16,
  RLMPC_ERR_CORRUPT_FILE = 17,
  RLMPC_ERR_MISSING_ARTIFACT = 18,
  RLMPC_ERR_INTERNAL = 100
} rlmpc_status;

typedef struct rlmpc_config rlmpc_config;
typedef struct rlmpc_plant rlmpc_plant;
typedef struct rlmpc_controller rlmpc_controller;

RLMPC_API const char* rlmpc_version(void);

/* Message of the last failed call on this thread; "" if none. */
RLMPC_API const char* rlmpc_last_error(void);
RLMPC_API const char* rlmpc_status_name(rlmpc_status status);

/* Nonzero for failures caused by the caller's configuration or missing input
   artifacts, as opposed to failures while running. */
RLMPC_API int rlmpc_status_is_usage_error(rlmpc_status status);

/* 0 quiet, 1 info (default), 2 debug. Messages go to stderr. */
RLMPC_API void rlmpc_set_log_level(int level);

/* Configuration. Values set after loading override the file. */
RLMPC_API rlmpc_status rlmpc_config_load(const char* path, rlmpc_config** out);
RLMPC_API rlmpc_status rlmpc_config_parse(const char* text, rlmpc_config** out);
RLMPC_API rlmpc_status rlmpc_config_set(rlmpc_config* cfg, const char* key, const char* value);
/* Output directory of the run; valid until the next call on `cfg`. */
RLMPC_API const char* rlmpc_config_out_dir(const rlmpc_config* cfg);
RLMPC_API void rlmpc_config_free(rlmpc_config* cfg);

/* Commands. `controller` is one of mpc, drmpc, nnmpc, warmstart, rlmpc; `mode`
   is warmstart or rlmpc. */
RLMPC_API rlmpc_status rlmpc_cmd_simulate(const rlmpc_config* cfg, const char* controller);
RLMPC_API rlmpc_status rlmpc_cmd_dataset(const rlmpc_config* cfg);
RLMPC_API rlmpc_status rlmpc_cmd_train_nnmpc(const rlmpc_config* cfg);
RLMPC_API rlmpc_status rlmpc_cmd_pretrain_critic(const rlmpc_config* cfg, const char* mode);
RLMPC_API rlmpc_status rlmpc_cmd_train_rlmpc(const rlmpc_config* cfg, const char* mode, int resume);
RLMPC_API rlmpc_status rlmpc_cmd_evaluate(const rlmpc_config* cfg);
RLMPC_API rlmpc_status rlmpc_cmd_benchmark(const rlmpc_config* cfg);

/* Nonlinear plant, nominal or with the configured perturbation. States are
   [theta, alpha, theta_dot, alpha_dot]. */
RLMPC_API rlmpc_status rlmpc_plant_create(const rlmpc_config* cfg, int perturbed, rlmpc_plant** out);
RLMPC_API rlmpc_status rlmpc_plant_step(const rlmpc_plant* plant, const double x[4], double u, double dt,
                                        double x_next[4]);
RLMPC_API rlmpc_status rlmpc_plant_derivative(const rlmpc_plant* plant, const double x[4], double u,
                                              double dx[4]);
RLMPC_API void rlmpc_plant_free(rlmpc_plant* plant);

/* Controller tracking the configured reference. Learned controllers load
   their weights from the run directory. */
RLMPC_API rlmpc_status rlmpc_controller_create(const rlmpc_config* cfg, const char* id,
                                               rlmpc_controller** out);
RLMPC_API rlmpc_status rlmpc_controller_act(const rlmpc_controller* ctrl, const double x[4], long long k,
                                            double* u);
/* Closed loop from the origin for `duration` s; average cost over [ts, tf].
   `csv_path` may be NULL. */
RLMPC_API rlmpc_status rlmpc_controller_rollout(const rlmpc_controller* ctrl, const rlmpc_plant* plant,
                                                double duration, double ts, double tf, const char* csv_path,
                                                double* j_ac);
/* Per-call timing in seconds. */
RLMPC_API rlmpc_status rlmpc_controller_benchmark(const rlmpc_controller* ctrl, int n_steps, int warmup,
                                                  double* mean_s, double* p50_s, double* p99_s);
RLMPC_API void rlmpc_controller_free(rlmpc_controller* ctrl);

#ifdef __cplusplus
}
#endif

#endif /* RLMPC_RLMPC_H */

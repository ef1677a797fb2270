/*
 * plrank — Bayesian nonparametric Plackett-Luce ranking models.
 *
 * C interface to the shared library: opaque handles, integer status
 * codes, and UTF-8 strings. Configuration crosses the boundary as JSON
 * text; datasets as CSV (header `epoch,rank,item`); chains as JSON
 * lines. Every function returning plr_status sets a thread-local error
 * message retrievable via plr_last_error() on failure.
 */

#ifndef PLRANK_H
#define PLRANK_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PLRANK_API __declspec(dllexport)
#else
#define PLRANK_API __attribute__((visibility("default")))
#endif

typedef enum plr_status {
  PLR_OK = 0,
  PLR_ERR_INVALID_ARGUMENT = 1,
  PLR_ERR_PARSE = 2,
  PLR_ERR_IO = 3,
  PLR_ERR_DOMAIN = 4,
  PLR_ERR_INTERNAL = 5
} plr_status;

typedef struct plr_dataset plr_dataset;
typedef struct plr_chain plr_chain;

PLRANK_API const char* plr_version(void);
PLRANK_API const char* plr_status_name(plr_status status);

/* message for the most recent failure on this thread; empty on success */
PLRANK_API const char* plr_last_error(void);

/* ---- datasets ------------------------------------------------------ */

PLRANK_API plr_status plr_dataset_load_csv(const char* path, plr_dataset** out);
PLRANK_API plr_status plr_dataset_parse_csv(const char* text, plr_dataset** out);
PLRANK_API plr_status plr_dataset_save_csv(const plr_dataset* data, const char* path);
PLRANK_API int plr_dataset_num_epochs(const plr_dataset* data);
PLRANK_API int plr_dataset_num_items(const plr_dataset* data);
PLRANK_API void plr_dataset_free(plr_dataset* data);

/* ---- simulation ------------------------------------------------------
 * config_json keys: model ("static"|"dynamic"), alpha, tau, phi | xi,
 * epochs, list_len, seed, epsilon. Ground truth (weights per epoch) is
 * returned as JSON; free with plr_string_free. */
PLRANK_API plr_status plr_simulate(const char* config_json, plr_dataset** out_data,
                                   char** out_truth_json);

/* ---- fitting ---------------------------------------------------------
 * config_json keys: model, iterations, burn_in, thinning, seed, tau,
 * alpha {prior|fixed}, phi {mode, value, xi, prior}, mh_sigma,
 * first_appearance_filter, chains, time_unit. */
PLRANK_API plr_status plr_fit(const plr_dataset* data, const char* config_json,
                              plr_chain** out);

PLRANK_API plr_status plr_chain_save_jsonl(const plr_chain* chain, const char* path);
PLRANK_API plr_status plr_chain_load_jsonl(const char* path, plr_chain** out);
/* posterior summary (normalized weights incl. the unseen-mass series) */
PLRANK_API plr_status plr_chain_summary_csv(const plr_chain* chain, const char* path);
/* pool draws of a compatible chain into dst (multi-chain runs) */
PLRANK_API plr_status plr_chain_append(plr_chain* dst, const plr_chain* src);
PLRANK_API long plr_chain_num_draws(const plr_chain* chain);
PLRANK_API void plr_chain_free(plr_chain* chain);

/* ---- diagnostics ------------------------------------------------------
 * suite: psi-kappa | enumerate | marginal | geweke | lifetime |
 * stationarity. Returns PLR_OK with a JSON report; the report's "pass"
 * field carries the verdict. config_json may be NULL ({"seed":..,"n":..}). */
PLRANK_API plr_status plr_diagnose(const char* suite, const char* config_json,
                                   char** out_report_json);

PLRANK_API void plr_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PLRANK_H */

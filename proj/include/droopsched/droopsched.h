/*
 * Copyright 2026 The droopsched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DROOPSCHED_H
#define DROOPSCHED_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(DROOPSCHED_BUILD)
#define DS_API __declspec(dllexport)
#else
#define DS_API __declspec(dllimport)
#endif
#else
#define DS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ds_status {
  DS_OK = 0,
  DS_ERR_INVALID_ARGUMENT = 1,
  DS_ERR_PARSE = 2,
  DS_ERR_IO = 3,
  DS_ERR_TOPOLOGY = 4,
  DS_ERR_NO_CONVERGENCE = 5,
  DS_ERR_INFEASIBLE = 6,
  DS_ERR_STALE_MODEL = 7,
  DS_ERR_INTERNAL = 8,
  DS_ERR_SIMULATION = 9 /* run aborted; the trace handle holds the partial run */
} ds_status;

typedef struct ds_config ds_config;
typedef struct ds_trace ds_trace;
typedef struct ds_network ds_network;

DS_API const char* ds_version(void);
DS_API const char* ds_status_name(ds_status status);
/* Message of the last failed call on this thread; "" if none. */
DS_API const char* ds_last_error(void);

/* ---- configuration ---- */

DS_API ds_status ds_config_load(const char* path, ds_config** out);
DS_API ds_status ds_config_set(ds_config* cfg, const char* section, const char* key, const char* value);
/* Copies the value into buf (NUL terminated); *needed gets the full length
 * including the terminator. Returns DS_ERR_INVALID_ARGUMENT if buf is too small. */
DS_API ds_status ds_config_get(const ds_config* cfg, const char* section, const char* key, char* buf, size_t len,
                               size_t* needed);
DS_API ds_status ds_config_validate(const ds_config* cfg);
DS_API ds_status ds_config_write(const ds_config* cfg, const char* path);
DS_API void ds_config_free(ds_config* cfg);

/* ---- closed-loop runs ---- */

/* On DS_ERR_SIMULATION *out is still set and holds the trace up to the failure. */
DS_API ds_status ds_run(const ds_config* cfg, ds_trace** out);
DS_API ds_status ds_trace_write(const ds_trace* trace, const char* dir);
DS_API double ds_trace_failure_time(const ds_trace* trace); /* negative if the run completed */
DS_API size_t ds_trace_metric_count(const ds_trace* trace);
DS_API ds_status ds_trace_metric_at(const ds_trace* trace, size_t index, const char** name, double* value);
DS_API ds_status ds_trace_metric(const ds_trace* trace, const char* name, double* value);
DS_API void ds_trace_free(ds_trace* trace);

/* Metrics recomputed from a trace directory; same names as ds_trace_metric_at. */
DS_API ds_status ds_report(const char* trace_dir, double v_min, double v_max, const char* plot_dir,
                           ds_trace** out);

/* Scenario bundles: "overvoltage", "frequency", "plug-and-play", "feeder37". */
DS_API ds_status ds_synth(const char* scenario, const char* dir);

/* ---- power flow ---- */

DS_API ds_status ds_network_load(const char* path, double v_sub, ds_network** out);
/* Number of buses excluding the substation. */
DS_API size_t ds_network_buses(const ds_network* net);
/* Reads node,p_pu,q_pu (net injections, generation positive) into p and q of
 * length ds_network_buses; nodes not listed get zero. */
DS_API ds_status ds_injections_load(const ds_network* net, const char* path, double* p, double* q);
/* v has room for buses + 1 entries, v[0] is the substation. */
DS_API ds_status ds_powerflow(const ds_network* net, const double* p, const double* q, double* v, double* p_pcc,
                              double* q_pcc, int* iterations);
DS_API void ds_network_free(ds_network* net);

/* ---- stability gate ---- */

typedef struct ds_stability_row {
  int node;
  int pass;
  double a; /* k_pv / tau_p */
  double b; /* k_qv / tau_q */
  double form;
} ds_stability_row;

/* Checks every gains row against the fleet of the DER file. Fills up to cap
 * rows; *count gets the number of gains rows. */
DS_API ds_status ds_stability_check(const ds_network* net, const char* der_path, const char* gains_path,
                                    double* gamma, ds_stability_row* rows, size_t cap, size_t* count);

#ifdef __cplusplus
}
#endif

#endif /* DROOPSCHED_H */

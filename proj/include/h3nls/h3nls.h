/* C interface to the radial NLS laboratory.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Every fallible call returns an h3nls_status; on failure a message for the
 * calling thread is available from h3nls_last_error() until the next call.
 * Strings returned through char** are owned by the caller and released with
 * h3nls_string_free().
 */
#ifndef H3NLS_H
#define H3NLS_H

#include <stddef.h>
#include <stdint.h>

#if defined(H3NLS_BUILDING_LIBRARY)
#define H3NLS_API __attribute__((visibility("default")))
#else
#define H3NLS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define H3NLS_ABI_VERSION 1u

typedef enum h3nls_status {
  H3NLS_OK = 0,
  H3NLS_ERR_INVALID_PARAMETER = 1,
  H3NLS_ERR_INVALID_ARGUMENT = 2,
  H3NLS_ERR_NUMERIC_DOMAIN = 3,
  H3NLS_ERR_UNSUPPORTED_RETENTION = 4,
  H3NLS_ERR_CONFIG = 5,
  H3NLS_ERR_IO = 6,
  H3NLS_ERR_VERSION_MISMATCH = 7,
  H3NLS_ERR_CORRUPT = 8,
  H3NLS_ERR_NUMERIC_FATAL = 9,
  H3NLS_ERR_NULL_POINTER = 10,
  H3NLS_ERR_INTERNAL = 11
} h3nls_status;

typedef struct h3nls_grid h3nls_grid;
typedef struct h3nls_field h3nls_field;
typedef struct h3nls_config h3nls_config;
typedef struct h3nls_run h3nls_run;
typedef struct h3nls_result h3nls_result;

H3NLS_API unsigned h3nls_abi_version(void);
H3NLS_API const char* h3nls_last_error(void);
H3NLS_API const char* h3nls_status_name(h3nls_status status);
/* Process exit status for a failed call: 3 for numeric failures, 2 otherwise. */
H3NLS_API int h3nls_exit_code(h3nls_status status);
H3NLS_API void h3nls_string_free(char* s);

/* Grids */
H3NLS_API h3nls_status h3nls_grid_create(double radius, int intervals, h3nls_grid** out);
H3NLS_API h3nls_status h3nls_grid_size(const h3nls_grid* grid, size_t* nodes);
H3NLS_API void h3nls_grid_destroy(h3nls_grid* grid);

/* Fields (stored as w = sinh(r) u at the interior nodes) */
H3NLS_API h3nls_status h3nls_gen_data(const h3nls_grid* grid, double s, uint64_t seed,
                                       double amplitude, double delta_spec, h3nls_field** out);
H3NLS_API h3nls_status h3nls_field_create(const h3nls_grid* grid, const double* re,
                                           const double* im, size_t n, h3nls_field** out);
H3NLS_API h3nls_status h3nls_field_values(const h3nls_field* field, double* re, double* im,
                                           size_t n);
/* spec is one of "L<p>", "Linf", "H<sigma>", "WsupSinh", "W(a,p)". */
H3NLS_API h3nls_status h3nls_field_norm(const h3nls_field* field, const char* spec,
                                         double* out);
H3NLS_API h3nls_status h3nls_field_energy(const h3nls_field* field, double* out);
H3NLS_API h3nls_status h3nls_field_mass(const h3nls_field* field, double* out);
H3NLS_API h3nls_status h3nls_field_to_json(const h3nls_field* field, char** out);
H3NLS_API void h3nls_field_destroy(h3nls_field* field);

/* Configurations */
H3NLS_API h3nls_status h3nls_config_default(h3nls_config** out);
H3NLS_API h3nls_status h3nls_config_load(const char* path, h3nls_config** out);
H3NLS_API h3nls_status h3nls_config_parse(const char* json, h3nls_config** out);
H3NLS_API h3nls_status h3nls_config_to_json(const h3nls_config* cfg, char** out);
H3NLS_API h3nls_status h3nls_config_set_seed(h3nls_config* cfg, uint64_t seed);
H3NLS_API h3nls_status h3nls_config_set_out(h3nls_config* cfg, const char* dir);
H3NLS_API h3nls_status h3nls_config_out(const h3nls_config* cfg, char** out);
H3NLS_API void h3nls_config_destroy(h3nls_config* cfg);

/* Step-wise runs */
H3NLS_API h3nls_status h3nls_run_create(const h3nls_config* cfg, h3nls_run** out);
H3NLS_API h3nls_status h3nls_run_resume(const char* checkpoint_path, h3nls_run** out);
H3NLS_API h3nls_status h3nls_run_advance(h3nls_run* run, int64_t steps, int* done);
H3NLS_API h3nls_status h3nls_run_progress(const h3nls_run* run, int64_t* step, int64_t* total);
H3NLS_API h3nls_status h3nls_run_checkpoint(const h3nls_run* run, const char* path);
/* Closes the run and evaluates its audits; the run handle is spent afterwards. */
H3NLS_API h3nls_status h3nls_run_finish(h3nls_run* run, h3nls_result** out);
H3NLS_API void h3nls_run_destroy(h3nls_run* run);

H3NLS_API h3nls_status h3nls_result_report(const h3nls_result* result, char** json);
H3NLS_API h3nls_status h3nls_result_ledger(const h3nls_result* result, char** json);
H3NLS_API h3nls_status h3nls_result_history_csv(const h3nls_result* result, char** csv);
H3NLS_API h3nls_status h3nls_result_audits_pass(const h3nls_result* result, int* pass);
/* Writes history.csv, ledger.json and report.json into dir. */
H3NLS_API h3nls_status h3nls_result_write(const h3nls_result* result, const char* dir,
                                           int force);
H3NLS_API void h3nls_result_destroy(h3nls_result* result);

/* Experiment drivers. audits_pass receives 1 when every requested audit
 * passed. Outputs go to out_dir; existing files are an error unless force. */
H3NLS_API h3nls_status h3nls_write_data(const h3nls_config* cfg, const char* out_dir,
                                         int force);
H3NLS_API h3nls_status h3nls_simulate(const h3nls_config* cfg, const char* out_dir, int force,
                                       int* audits_pass);
H3NLS_API h3nls_status h3nls_resume(const char* checkpoint_path, const char* out_dir, int force,
                                     int* audits_pass);
H3NLS_API h3nls_status h3nls_sweep(const h3nls_config* cfg, const char* out_dir, int force,
                                    int threads, int* audits_pass);
H3NLS_API h3nls_status h3nls_audit(const h3nls_config* cfg, const char* out_dir, int force,
                                    int* audits_pass);
H3NLS_API h3nls_status h3nls_calibrate(const h3nls_config* cfg, const char* out_dir, int force);

#ifdef __cplusplus
}
#endif

#endif /* H3NLS_H */

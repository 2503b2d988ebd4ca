#ifndef MODELSCOPE_H
#define MODELSCOPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MS_API __declspec(dllexport)
#else
#define MS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ms_dataset ms_dataset;
typedef struct ms_vis_result ms_vis_result;
typedef struct ms_af_result ms_af_result;

typedef enum ms_status {
  MS_OK = 0,
  MS_INVALID_ARGUMENT = 1,
  MS_IO = 2,
  MS_MISSING_COLUMN = 3,
  MS_RANK_DEFICIENT = 4,
  MS_NON_FINITE_VALUE = 5,
  MS_ALREADY_HAS_RV = 6,
  MS_TOO_FEW_MAINS = 7,
  MS_NOT_POSITIVE_DEFINITE = 8,
  MS_DEGENERATE_PROBABILITY = 9,
  MS_UNKNOWN_VARIABLE = 10,
  MS_TOO_MANY_SKIPPED = 11,
  MS_NO_PEAK = 12,
  MS_ALL_MODELS_CONTAIN_RV = 13,
  MS_INTERNAL = 14
} ms_status;

/* Library version string, e.g. "1.0.0". */
MS_API const char* ms_version(void);
/* Message of the last failed call on this thread ("" if none). */
MS_API const char* ms_last_error(void);
MS_API const char* ms_status_name(ms_status status);

/* Strings returned through char** out-parameters are owned by the caller. */
MS_API void ms_string_free(char* s);

/* Datasets. factors: "col" or "col:level1|level2|..." entries. family:
   "gaussian", "binomial" or "poisson". */
MS_API ms_status ms_dataset_load(const char* path, const char* response, const char* family,
                                 const char* const* factors, size_t n_factors, ms_dataset** out);
MS_API ms_status ms_dataset_parse(const char* csv_text, const char* response, const char* family,
                                  const char* const* factors, size_t n_factors, ms_dataset** out);
MS_API ms_status ms_dataset_add_redundant(const ms_dataset* d, uint64_t seed, ms_dataset** out);
/* Weighted least squares surrogate of a binomial dataset's full model. */
MS_API ms_status ms_dataset_to_wls(const ms_dataset* d, ms_dataset** out);
MS_API void ms_dataset_free(ms_dataset* d);
/* Sizes are 0 for a NULL dataset. */
MS_API int ms_dataset_n(const ms_dataset* d);
MS_API int ms_dataset_p(const ms_dataset* d);
/* Column name j, valid while d lives; NULL when out of range. */
MS_API const char* ms_dataset_name(const ms_dataset* d, int j);
MS_API ms_status ms_dataset_columns_json(const ms_dataset* d, char** json_out);

/* Fit of the model with the listed variables (n_vars == 0: full model). */
MS_API ms_status ms_fit_json(const ms_dataset* d, const char* const* vars, size_t n_vars, char** json_out);
/* forward != 0 starts from the null model. */
MS_API ms_status ms_step_json(const ms_dataset* d, int forward, double lambda, char** json_out);

/* Bootstrap runs. options_json holds run settings (B, nbest, seed, ...); the
   data/response fields are ignored. */
MS_API ms_status ms_vis_run(const ms_dataset* d, const char* options_json, ms_vis_result** out);
MS_API ms_status ms_vis_to_json(const ms_vis_result* v, char** json_out);
MS_API void ms_vis_free(ms_vis_result* v);

MS_API ms_status ms_af_run(const ms_dataset* d, const char* options_json, ms_af_result** out);
MS_API ms_status ms_af_to_json(const ms_af_result* a, char** json_out);
/* c_star for best_only (1) or the 1/m weighting (0); MS_NO_PEAK if unset. */
MS_API ms_status ms_af_c_star(const ms_af_result* a, int best_only, double* out);
MS_API void ms_af_free(ms_af_result* a);

/* Validates a run configuration and returns it with defaults filled in. */
MS_API ms_status ms_config_normalize(const char* config_json, char** json_out);
/* Executes a fit/step/vis/af configuration end to end. */
MS_API ms_status ms_run_json(const char* config_json, char** json_out);
/* kind: "lvk", "boot", "vip" (vis documents) or "af". */
MS_API ms_status ms_render_svg(const char* result_json, const char* kind, char** svg_out);

#ifdef __cplusplus
}
#endif

#endif

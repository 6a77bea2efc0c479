/* Multi-scale masked autoencoder for multi-lead ECG anomaly detection.
 *
 * All functions return an mmae_status. On failure a description is available
 * from mmae_last_error() on the calling thread. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * mmae_string_free(). Handles are released with their matching _free call;
 * passing NULL to any _free function is a no-op.
 */
#ifndef MMAE_MMAE_H
#define MMAE_MMAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MMAE_BUILDING_LIBRARY)
#    define MMAE_API __declspec(dllexport)
#  else
#    define MMAE_API __declspec(dllimport)
#  endif
#else
#  define MMAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmae_status {
  MMAE_OK = 0,
  MMAE_ERR_INVALID_ARGUMENT = 1, /* NULL handle or malformed argument */
  MMAE_ERR_CONFIG = 2,           /* invalid configuration or option */
  MMAE_ERR_FORMAT = 3,           /* unrecognised file format */
  MMAE_ERR_CORRUPT = 4,          /* file contents inconsistent with its header */
  MMAE_ERR_SHAPE = 5,            /* tensor shape mismatch */
  MMAE_ERR_CONTRACT = 6,         /* precondition violated (e.g. record/model mismatch) */
  MMAE_ERR_VALIDATION = 7,       /* data rejected (e.g. abnormal record in training set) */
  MMAE_ERR_METRIC = 8,           /* metric undefined (e.g. single-class AUROC) */
  MMAE_ERR_IO = 9,               /* file system failure */
  MMAE_ERR_INTERNAL = 10
} mmae_status;

typedef struct mmae_record mmae_record;
typedef struct mmae_model mmae_model;
typedef struct mmae_report mmae_report;

MMAE_API const char* mmae_version(void);
MMAE_API const char* mmae_status_name(mmae_status status);
/* Message of the last failed call on this thread ("" if none). */
MMAE_API const char* mmae_last_error(void);
MMAE_API void mmae_string_free(char* s);
/* Caps worker threads; 0 restores the default (hardware concurrency). */
MMAE_API void mmae_set_threads(unsigned n);

/* Run configuration: JSON with "data", "model", "train" and "infer" sections. */
MMAE_API mmae_status mmae_config_default(char** out_json);
/* Parses, validates and re-serialises a configuration with all defaults filled in. */
MMAE_API mmae_status mmae_config_normalize(const char* config_json, char** out_json);

/* Records: ECGB binary or CSV (chosen by the .csv extension), with sidecars. */
MMAE_API mmae_status mmae_record_load(const char* path, mmae_record** out);
MMAE_API mmae_status mmae_record_save(const mmae_record* record, const char* path);
MMAE_API void mmae_record_free(mmae_record* record);
MMAE_API mmae_status mmae_record_shape(const mmae_record* record, size_t* leads, size_t* samples, uint32_t* fs);
/* Lead-major K x Q samples; valid while the record lives. */
MMAE_API const float* mmae_record_data(const mmae_record* record);
/* {"id", "label", "has_mask"} */
MMAE_API mmae_status mmae_record_info(const mmae_record* record, char** out_json);

/* Synthetic dataset. Options JSON keys: n_normal, n_abnormal, n_test_normal,
 * leads, fs, duration, heart_rate_min, heart_rate_max, noise_std, seed.
 * Writes records plus train.json, test.json and manifest.json into out_dir. */
MMAE_API mmae_status mmae_synth(const char* options_json, const char* out_dir, char** out_summary_json);
/* Splits a directory of exported records into train/test manifests. */
MMAE_API mmae_status mmae_import(const char* dir, const char* out_dir, double test_normal_fraction, uint64_t seed,
                                 char** out_summary_json);

/* Models. A freshly created model holds initial (untrained) parameters. */
MMAE_API mmae_status mmae_model_create(const char* config_json, uint64_t seed, mmae_model** out);
MMAE_API mmae_status mmae_model_load(const char* path, mmae_model** out);
MMAE_API mmae_status mmae_model_save(const mmae_model* model, const char* path);
MMAE_API void mmae_model_free(mmae_model* model);
/* {"model": ..., "infer": ...} */
MMAE_API mmae_status mmae_model_config(const mmae_model* model, char** out_json);
MMAE_API mmae_status mmae_model_param_count(const mmae_model* model, uint64_t* out);
/* Multiply-accumulate breakdown of one forward pass plus the total for H passes
 * over all regions. */
MMAE_API mmae_status mmae_model_flops(const mmae_model* model, char** out_json);
/* Replaces the inference settings ("infer" section JSON). */
MMAE_API mmae_status mmae_model_set_infer(mmae_model* model, const char* infer_json);
/* 16 hex digits identifying the serialized checkpoint. */
MMAE_API mmae_status mmae_model_hash(const mmae_model* model, char** out_hex);

typedef void (*mmae_epoch_callback)(size_t epoch, double mean_loss, double lr, void* user);
typedef void (*mmae_progress_callback)(const char* message, void* user);

/* Trains on the records of a manifest and writes the checkpoint (and the
 * JSON-lines history when history_path is not NULL). */
MMAE_API mmae_status mmae_train(const char* config_json, const char* manifest_path, const char* out_checkpoint,
                                const char* history_path, mmae_epoch_callback on_epoch, void* user,
                                char** out_summary_json);

MMAE_API mmae_status mmae_score(const mmae_model* model, const mmae_record* record, mmae_report** out);
MMAE_API double mmae_report_sample_score(const mmae_report* report);
/* K x Q point scores, lead-major; valid while the report lives. */
MMAE_API const double* mmae_report_point_scores(const mmae_report* report, size_t* leads, size_t* samples);
MMAE_API mmae_status mmae_report_json(const mmae_report* report, int include_points, char** out_json);
/* leads: comma-separated lead names ("II,V1") or 0-based indices ("1,6");
 * NULL or "" selects all leads. Window [begin, end) in samples; end = 0 means
 * the end of the record. */
MMAE_API mmae_status mmae_report_svg(const mmae_report* report, const mmae_record* record, const char* leads,
                                     size_t window_begin, size_t window_end, char** out_svg);
MMAE_API void mmae_report_free(mmae_report* report);

/* Detection (and optionally localization) AUROC over a labeled manifest. */
MMAE_API mmae_status mmae_evaluate(const mmae_model* model, const char* manifest_path, int localization,
                                   char** out_json);

/* Finite-difference gradient suite in double precision. */
MMAE_API mmae_status mmae_gradcheck(char** out_json, int* passed);

/* Trains and evaluates ablation variants (comma-separated names) and optional
 * mask-ratio and H sweeps. Relative manifest paths in the config resolve
 * against base_dir (NULL = current directory). */
MMAE_API mmae_status mmae_ablate(const char* config_json, const char* base_dir, const char* variants,
                                 const double* thetas, size_t n_thetas, const size_t* passes, size_t n_passes,
                                 mmae_progress_callback progress, void* user, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* MMAE_MMAE_H */

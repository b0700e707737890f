/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 *
 * C API of the sgsm shared library.
 *
 * sgsm pre-trains a two-phase autoencoder over a bank of signal-processing
 * methods: per-method "compressor" autoencoders squeeze transformed
 * sequences into fixed-length codes, and a masked denoising "mixer"
 * autoencoder fuses the concatenated codes into task embeddings. A labeled
 * dataset is then swept over channel-mask configurations to pick the
 * method subset that serves the downstream task best.
 *
 * All handles are opaque; every fallible call returns sgsm_status and leaves
 * a human-readable message in sgsm_last_error() (thread-local).
 */
#ifndef SGSM_SGSM_H
#define SGSM_SGSM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SGSM_API __declspec(dllexport)
#else
#define SGSM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgsm_status {
  SGSM_OK = 0,
  SGSM_ERROR_CONFIG = 2,   /* malformed or inconsistent configuration */
  SGSM_ERROR_DATA = 3,     /* missing or out-of-contract data */
  SGSM_ERROR_DIVERGED = 4, /* training produced a non-finite loss */
  SGSM_ERROR_INVALID = 5,  /* precondition violated by the caller */
  SGSM_ERROR_INTERNAL = 6
} sgsm_status;

/* A configured (and possibly pre-trained) SGSM pipeline. */
typedef struct sgsm_pipeline sgsm_pipeline;
/* A dense row-major float32 tensor in the SGTF file format. */
typedef struct sgsm_tensor sgsm_tensor;

SGSM_API const char* sgsm_version(void);
SGSM_API const char* sgsm_status_name(sgsm_status status);
/* Message of the most recent failure on the calling thread ("" if none). */
SGSM_API const char* sgsm_last_error(void);
SGSM_API void sgsm_string_free(char* str);

/* ---- SGTF tensors ----------------------------------------------------- */

SGSM_API sgsm_status sgsm_tensor_create(const uint64_t* dims, uint32_t ndim,
                                        const float* values,
                                        sgsm_tensor** out);
SGSM_API sgsm_status sgsm_tensor_read(const char* path, sgsm_tensor** out);
SGSM_API sgsm_status sgsm_tensor_write(const char* path,
                                       const sgsm_tensor* tensor);
SGSM_API uint32_t sgsm_tensor_ndim(const sgsm_tensor* tensor);
SGSM_API uint64_t sgsm_tensor_dim(const sgsm_tensor* tensor, uint32_t axis);
SGSM_API const float* sgsm_tensor_data(const sgsm_tensor* tensor);
SGSM_API size_t sgsm_tensor_numel(const sgsm_tensor* tensor);
SGSM_API void sgsm_tensor_free(sgsm_tensor* tensor);

/* ---- pipeline lifecycle ------------------------------------------------ */

SGSM_API sgsm_status sgsm_pipeline_open(const char* config_path,
                                        sgsm_pipeline** out);
SGSM_API sgsm_status sgsm_pipeline_open_json(const char* config_json,
                                             sgsm_pipeline** out);
SGSM_API void sgsm_pipeline_free(sgsm_pipeline* pipeline);

SGSM_API uint32_t sgsm_pipeline_channel_count(const sgsm_pipeline* pipeline);
SGSM_API uint32_t sgsm_pipeline_code_length(const sgsm_pipeline* pipeline);
SGSM_API uint32_t sgsm_pipeline_embedding_length(const sgsm_pipeline* pipeline);
SGSM_API uint64_t sgsm_pipeline_seed(const sgsm_pipeline* pipeline);

/* ---- workflow ----------------------------------------------------------
 * Dataset directories hold unlabeled.sgtf / labeled.sgtf / labels.sgtf,
 * external_<name>.<split>.sgtf per external channel, and dataset.json.
 * Checkpoint directories hold instance.json, compressor_<id>.sgtf.json plus
 * parameter tensors, and mixer.sgtf.json.
 */

/* Writes a deterministic synthetic dataset for the configured task. */
SGSM_API sgsm_status sgsm_synth(sgsm_pipeline* pipeline, const char* out_dir,
                                uint64_t seed);

/* Applies every registered method and writes transformed_<id>.<split>.sgtf. */
SGSM_API sgsm_status sgsm_transform(sgsm_pipeline* pipeline,
                                    const char* data_dir, const char* split,
                                    const char* out_dir);

SGSM_API sgsm_status sgsm_train_compressors(sgsm_pipeline* pipeline,
                                            const char* data_dir,
                                            const char* checkpoint_dir,
                                            uint64_t seed);
SGSM_API sgsm_status sgsm_train_mixer(sgsm_pipeline* pipeline,
                                      const char* data_dir,
                                      const char* checkpoint_dir,
                                      uint64_t seed);
/* Both stages back to back. */
SGSM_API sgsm_status sgsm_pretrain(sgsm_pipeline* pipeline,
                                   const char* data_dir,
                                   const char* checkpoint_dir, uint64_t seed);

SGSM_API sgsm_status sgsm_load_checkpoints(sgsm_pipeline* pipeline,
                                           const char* checkpoint_dir);

/* Embeds a dataset split under a channel mask such as "TTFTF" and writes
 * the embedding matrix plus a "<out_path>.json" sidecar. */
SGSM_API sgsm_status sgsm_embed(sgsm_pipeline* pipeline, const char* data_dir,
                                const char* split, const char* mask,
                                const char* out_path);

/* Sweeps channel masks over the labeled split and writes the JSON report
 * (and optionally an aligned text table). masks_csv selects specific masks
 * ("TTTTT,FFFTF"); NULL or "" sweeps all 2^n - 1. Negative epsilon/varsigma
 * disable the corresponding gate; otherwise the call fails when the
 * selection margin falls below epsilon or the train/holdout gap exceeds
 * varsigma. */
SGSM_API sgsm_status sgsm_select(sgsm_pipeline* pipeline, const char* data_dir,
                                 const char* masks_csv, uint64_t seed,
                                 const char* report_json_path,
                                 const char* report_table_path, double epsilon,
                                 double varsigma);

/* Renders the aligned text table of a report; free with sgsm_string_free. */
SGSM_API sgsm_status sgsm_report_render(const char* report_json_path,
                                        char** out_table);
SGSM_API sgsm_status sgsm_report_check_gates(const char* report_json_path,
                                             double epsilon, double varsigma);

#ifdef __cplusplus
}
#endif

#endif /* SGSM_SGSM_H */

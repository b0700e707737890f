/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "sgsm/sgsm.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "errors.hpp"
#include "pipeline.hpp"
#include "tensor.hpp"

namespace fs = std::filesystem;

extern "C" {

struct sgsm_tensor {
  sgsm::Tensor rep;
};

struct sgsm_pipeline {
  sgsm::PipelineConfig config;
  std::optional<sgsm::SgsmInstance> instance;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

sgsm_status fail(sgsm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
sgsm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SGSM_OK;
  } catch (const sgsm::ConfigError& e) {
    return fail(SGSM_ERROR_CONFIG, e.what());
  } catch (const sgsm::DataError& e) {
    return fail(SGSM_ERROR_DATA, e.what());
  } catch (const sgsm::DivergenceError& e) {
    return fail(SGSM_ERROR_DIVERGED, e.what());
  } catch (const sgsm::InvalidArgument& e) {
    return fail(SGSM_ERROR_INVALID, e.what());
  } catch (const std::exception& e) {
    return fail(SGSM_ERROR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw sgsm::InvalidArgument(what);
}

sgsm::SgsmInstance& trained_instance(sgsm_pipeline* p) {
  require(p != nullptr, "pipeline handle is null");
  if (!p->instance.has_value() || !p->instance->trained()) {
    throw sgsm::InvalidArgument(
        "pipeline has no trained models; run the training stages or load "
        "checkpoints first");
  }
  return *p->instance;
}

std::vector<sgsm::MaskConfig> parse_masks_csv(const char* masks_csv) {
  std::vector<sgsm::MaskConfig> masks;
  if (masks_csv == nullptr) return masks;
  std::string text(masks_csv);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    if (!item.empty()) masks.push_back(sgsm::MaskConfig::from_string(item));
    start = end + 1;
  }
  return masks;
}

void apply_gates(const sgsm::SelectionResult& result, double epsilon,
                 double varsigma) {
  if (epsilon >= 0.0 && result.margin < epsilon) {
    throw sgsm::DataError("selection margin " + std::to_string(result.margin) +
                          " is below the required epsilon " +
                          std::to_string(epsilon));
  }
  if (varsigma >= 0.0 && result.gap > varsigma) {
    throw sgsm::DataError("train/holdout gap " + std::to_string(result.gap) +
                          " exceeds the allowed varsigma " +
                          std::to_string(varsigma));
  }
}

sgsm::SelectionResult read_report(const char* path) {
  require(path != nullptr, "report path is null");
  std::ifstream in(path);
  if (!in) throw sgsm::DataError(std::string("cannot open report: ") + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return sgsm::report_from_json(text);
}

}  // namespace

extern "C" {

const char* sgsm_version(void) { return "0.1.0"; }

const char* sgsm_status_name(sgsm_status status) {
  switch (status) {
    case SGSM_OK: return "ok";
    case SGSM_ERROR_CONFIG: return "config-error";
    case SGSM_ERROR_DATA: return "data-error";
    case SGSM_ERROR_DIVERGED: return "training-diverged";
    case SGSM_ERROR_INVALID: return "invalid-argument";
    case SGSM_ERROR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* sgsm_last_error(void) { return g_last_error.c_str(); }

void sgsm_string_free(char* str) { std::free(str); }

/* ---- tensors ----------------------------------------------------------- */

sgsm_status sgsm_tensor_create(const uint64_t* dims, uint32_t ndim,
                               const float* values, sgsm_tensor** out) {
  return guarded([&] {
    require(dims != nullptr && values != nullptr && out != nullptr,
            "tensor_create arguments must be non-null");
    std::vector<std::uint64_t> shape(dims, dims + ndim);
    std::size_t numel = shape.empty() ? 0 : 1;
    for (auto d : shape) numel *= static_cast<std::size_t>(d);
    auto t = std::make_unique<sgsm_tensor>();
    t->rep = sgsm::Tensor(std::move(shape),
                          std::vector<float>(values, values + numel));
    *out = t.release();
  });
}

sgsm_status sgsm_tensor_read(const char* path, sgsm_tensor** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "tensor_read arguments");
    auto t = std::make_unique<sgsm_tensor>();
    t->rep = sgsm::sgtf::read(path);
    *out = t.release();
  });
}

sgsm_status sgsm_tensor_write(const char* path, const sgsm_tensor* tensor) {
  return guarded([&] {
    require(path != nullptr && tensor != nullptr, "tensor_write arguments");
    sgsm::sgtf::write(path, tensor->rep);
  });
}

uint32_t sgsm_tensor_ndim(const sgsm_tensor* tensor) {
  return tensor ? static_cast<uint32_t>(tensor->rep.ndim()) : 0;
}

uint64_t sgsm_tensor_dim(const sgsm_tensor* tensor, uint32_t axis) {
  if (!tensor || axis >= tensor->rep.ndim()) return 0;
  return tensor->rep.shape[axis];
}

const float* sgsm_tensor_data(const sgsm_tensor* tensor) {
  return tensor ? tensor->rep.data() : nullptr;
}

size_t sgsm_tensor_numel(const sgsm_tensor* tensor) {
  return tensor ? tensor->rep.numel() : 0;
}

void sgsm_tensor_free(sgsm_tensor* tensor) { delete tensor; }

/* ---- pipeline ----------------------------------------------------------- */

sgsm_status sgsm_pipeline_open(const char* config_path, sgsm_pipeline** out) {
  return guarded([&] {
    require(config_path != nullptr && out != nullptr, "pipeline_open arguments");
    auto p = std::make_unique<sgsm_pipeline>();
    p->config = sgsm::PipelineConfig::load(config_path);
    *out = p.release();
  });
}

sgsm_status sgsm_pipeline_open_json(const char* config_json,
                                    sgsm_pipeline** out) {
  return guarded([&] {
    require(config_json != nullptr && out != nullptr,
            "pipeline_open_json arguments");
    auto p = std::make_unique<sgsm_pipeline>();
    p->config = sgsm::PipelineConfig::from_json_text(config_json);
    *out = p.release();
  });
}

void sgsm_pipeline_free(sgsm_pipeline* pipeline) { delete pipeline; }

uint32_t sgsm_pipeline_channel_count(const sgsm_pipeline* pipeline) {
  return pipeline ? static_cast<uint32_t>(pipeline->config.channel_count()) : 0;
}

uint32_t sgsm_pipeline_code_length(const sgsm_pipeline* pipeline) {
  return pipeline ? static_cast<uint32_t>(pipeline->config.code_length) : 0;
}

uint32_t sgsm_pipeline_embedding_length(const sgsm_pipeline* pipeline) {
  return pipeline ? static_cast<uint32_t>(pipeline->config.embedding_length())
                  : 0;
}

uint64_t sgsm_pipeline_seed(const sgsm_pipeline* pipeline) {
  return pipeline ? pipeline->config.seed : 0;
}

/* ---- workflow ----------------------------------------------------------- */

sgsm_status sgsm_synth(sgsm_pipeline* pipeline, const char* out_dir,
                       uint64_t seed) {
  return guarded([&] {
    require(pipeline != nullptr && out_dir != nullptr, "synth arguments");
    const auto data = sgsm::synth_dataset(pipeline->config, seed);
    sgsm::write_dataset(out_dir, data, pipeline->config, seed);
  });
}

sgsm_status sgsm_transform(sgsm_pipeline* pipeline, const char* data_dir,
                           const char* split, const char* out_dir) {
  return guarded([&] {
    require(pipeline != nullptr && data_dir != nullptr && split != nullptr &&
                out_dir != nullptr,
            "transform arguments");
    const auto data = sgsm::load_dataset(pipeline->config, data_dir, split);
    fs::create_directories(out_dir);
    for (std::size_t c = 0; c < pipeline->config.methods.size(); ++c) {
      const auto& spec = pipeline->config.methods[c];
      const auto inputs = sgsm::channel_inputs(pipeline->config, c, data);
      sgsm::Tensor rows =
          sgsm::Tensor::zeros({inputs.size(), spec.output_length});
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t k = 0; k < spec.output_length; ++k) {
          rows.values[i * spec.output_length + k] =
              static_cast<float>(inputs[i].values[k]);
        }
      }
      const std::string name =
          "transformed_" + spec.id() + "." + split + ".sgtf";
      sgsm::sgtf::write((fs::path(out_dir) / name).string(), rows);
    }
  });
}

sgsm_status sgsm_train_compressors(sgsm_pipeline* pipeline,
                                   const char* data_dir,
                                   const char* checkpoint_dir, uint64_t seed) {
  return guarded([&] {
    require(pipeline != nullptr && data_dir != nullptr &&
                checkpoint_dir != nullptr,
            "train_compressors arguments");
    pipeline->config.seed = seed;
    const auto data =
        sgsm::load_dataset(pipeline->config, data_dir, "unlabeled");
    pipeline->instance = sgsm::train_compressors_only(pipeline->config, data);
    sgsm::save_compressors(*pipeline->instance, checkpoint_dir);
  });
}

sgsm_status sgsm_train_mixer(sgsm_pipeline* pipeline, const char* data_dir,
                             const char* checkpoint_dir, uint64_t seed) {
  return guarded([&] {
    require(pipeline != nullptr && data_dir != nullptr &&
                checkpoint_dir != nullptr,
            "train_mixer arguments");
    pipeline->config.seed = seed;
    const auto data =
        sgsm::load_dataset(pipeline->config, data_dir, "unlabeled");
    if (!pipeline->instance.has_value() ||
        pipeline->instance->compressors.size() !=
            pipeline->config.methods.size()) {
      pipeline->instance = sgsm::load_instance(pipeline->config, checkpoint_dir,
                                               /*require_mixer=*/false);
    }
    sgsm::train_mixer_stage(*pipeline->instance, data);
    sgsm::save_instance(*pipeline->instance, checkpoint_dir);
  });
}

sgsm_status sgsm_pretrain(sgsm_pipeline* pipeline, const char* data_dir,
                          const char* checkpoint_dir, uint64_t seed) {
  return guarded([&] {
    require(pipeline != nullptr && data_dir != nullptr &&
                checkpoint_dir != nullptr,
            "pretrain arguments");
    pipeline->config.seed = seed;
    const auto data =
        sgsm::load_dataset(pipeline->config, data_dir, "unlabeled");
    pipeline->instance = sgsm::pretrain(pipeline->config, data);
    sgsm::save_instance(*pipeline->instance, checkpoint_dir);
  });
}

sgsm_status sgsm_load_checkpoints(sgsm_pipeline* pipeline,
                                  const char* checkpoint_dir) {
  return guarded([&] {
    require(pipeline != nullptr && checkpoint_dir != nullptr,
            "load_checkpoints arguments");
    pipeline->instance =
        sgsm::load_instance(pipeline->config, checkpoint_dir);
  });
}

sgsm_status sgsm_embed(sgsm_pipeline* pipeline, const char* data_dir,
                       const char* split, const char* mask,
                       const char* out_path) {
  return guarded([&] {
    require(data_dir != nullptr && split != nullptr && mask != nullptr &&
                out_path != nullptr,
            "embed arguments");
    auto& instance = trained_instance(pipeline);
    const auto data = sgsm::load_dataset(pipeline->config, data_dir, split);
    const auto mask_config = sgsm::MaskConfig::from_string(mask);
    const sgsm::Tensor embeddings =
        sgsm::embed_dataset(instance, data, mask_config);
    sgsm::sgtf::write(out_path, embeddings);

    std::ofstream sidecar(std::string(out_path) + ".json", std::ios::trunc);
    if (!sidecar) {
      throw sgsm::DataError(std::string("cannot create sidecar for ") +
                            out_path);
    }
    std::string channels;
    for (const auto& id : pipeline->config.method_ids()) {
      if (!channels.empty()) channels += "\", \"";
      channels += id;
    }
    sidecar << "{\n  \"schema\": 1,\n  \"kind\": \"sgsm-embedding\",\n"
            << "  \"mask\": \"" << mask_config.to_string() << "\",\n"
            << "  \"channels\": [\"" << channels << "\"],\n"
            << "  \"code_length\": " << pipeline->config.code_length << ",\n"
            << "  \"samples\": " << data.sample_count() << ",\n"
            << "  \"sequences_per_sample\": " << data.sequences_per_sample()
            << "\n}\n";
  });
}

sgsm_status sgsm_select(sgsm_pipeline* pipeline, const char* data_dir,
                        const char* masks_csv, uint64_t seed,
                        const char* report_json_path,
                        const char* report_table_path, double epsilon,
                        double varsigma) {
  return guarded([&] {
    require(data_dir != nullptr && report_json_path != nullptr,
            "select arguments");
    auto& instance = trained_instance(pipeline);
    const auto data = sgsm::load_dataset(pipeline->config, data_dir, "labeled");
    const auto masks = parse_masks_csv(masks_csv);
    const auto result = sgsm::run_selection(instance, data, masks, seed);

    std::ofstream out(report_json_path, std::ios::trunc);
    if (!out) {
      throw sgsm::DataError(std::string("cannot create report: ") +
                            report_json_path);
    }
    out << sgsm::report_to_json(result);
    if (report_table_path != nullptr && report_table_path[0] != '\0') {
      std::ofstream table(report_table_path, std::ios::trunc);
      if (!table) {
        throw sgsm::DataError(std::string("cannot create report table: ") +
                              report_table_path);
      }
      table << sgsm::render_report_table(result);
    }
    apply_gates(result, epsilon, varsigma);
  });
}

sgsm_status sgsm_report_render(const char* report_json_path, char** out_table) {
  return guarded([&] {
    require(out_table != nullptr, "report_render arguments");
    const auto result = read_report(report_json_path);
    const std::string table = sgsm::render_report_table(result);
    char* buffer = static_cast<char*>(std::malloc(table.size() + 1));
    if (buffer == nullptr) throw std::bad_alloc();
    std::memcpy(buffer, table.c_str(), table.size() + 1);
    *out_table = buffer;
  });
}

sgsm_status sgsm_report_check_gates(const char* report_json_path,
                                    double epsilon, double varsigma) {
  return guarded(
      [&] { apply_gates(read_report(report_json_path), epsilon, varsigma); });
}

}  // extern "C"

/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sgsm {
namespace {

// Stage tags for seed-stream derivation.
constexpr std::uint64_t kSynthTag = 0x73796e7468;       // "synth"
constexpr std::uint64_t kCompressorTag = 0x636d7072;    // "cmpr"
constexpr std::uint64_t kMixerTag = 0x6d697865;         // "mixe"

json layer_to_json(const LayerSpec& spec) {
  json j;
  j["kind"] = spec.kind_name();
  switch (spec.kind) {
    case LayerSpec::Kind::kLinear:
      j["in"] = spec.in;
      j["out"] = spec.out;
      break;
    case LayerSpec::Kind::kConv1d:
      j["in_channels"] = spec.in_channels;
      j["out_channels"] = spec.out_channels;
      j["kernel"] = spec.kernel;
      j["stride"] = spec.stride;
      break;
    case LayerSpec::Kind::kRelu:
      break;
  }
  return j;
}

json network_manifest(const Network& net) {
  json j;
  j["layers"] = json::array();
  for (const auto& spec : net.layers()) j["layers"].push_back(layer_to_json(spec));
  j["param_shapes"] = json::array();
  for (const auto& p : net.parameters()) j["param_shapes"].push_back(p.shape);
  return j;
}

void check_network_manifest(const Network& net, const json& j,
                            const std::string& what) {
  if (network_manifest(net) != j) {
    throw ConfigError("checkpoint " + what +
                      " does not match the configured architecture");
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot create " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing " + path);
}

json read_json_file(const std::string& path, const char* expected_kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
  if (expected_kind && j.value("kind", "") != expected_kind) {
    throw DataError(path + " is not a " + std::string(expected_kind) + " file");
  }
  return j;
}

void save_network_params(const Network& net, const std::string& dir,
                         const std::string& stem, std::size_t& file_index,
                         json& manifest_section) {
  manifest_section = network_manifest(net);
  manifest_section["param_files"] = json::array();
  for (const auto& p : net.parameters()) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), ".p%03zu.sgtf", file_index++);
    const std::string name = stem + suffix;
    sgtf::write((fs::path(dir) / name).string(), p);
    manifest_section["param_files"].push_back(name);
  }
}

void load_network_params(Network& net, const std::string& dir,
                         const json& manifest_section, const std::string& what) {
  check_network_manifest(net, [&] {
    json j = manifest_section;
    j.erase("param_files");
    return j;
  }(), what);
  const auto& files = manifest_section.at("param_files");
  auto& params = net.parameters();
  if (files.size() != params.size()) {
    throw ConfigError("checkpoint " + what + " has the wrong parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = sgtf::read((fs::path(dir) / files[i].get<std::string>()).string());
    if (t.shape != params[i].shape) {
      throw ConfigError("checkpoint " + what + " parameter shape mismatch");
    }
    params[i] = std::move(t);
  }
}

MethodSpec method_from_json(const json& j, std::size_t input_length) {
  MethodSpec m;
  m.kind = method_kind_from_string(j.at("kind").get<std::string>());
  m.input_length = input_length;
  if (m.kind == MethodKind::kMelBand) {
    m.mel_band = j.at("band").get<int>();
    m.mel_bins = j.value("mel_bins", 64);
  }
  if (m.kind == MethodKind::kHht) {
    m.hht_track_length = j.value("track_length", 128);
  }
  if (m.kind == MethodKind::kExternal) {
    m.external_name = j.at("name").get<std::string>();
    m.external_length = j.at("length").get<std::size_t>();
  }
  if (j.contains("output_length")) {
    m.output_length = j.at("output_length").get<std::size_t>();
  }
  return m;
}

json method_to_json(const MethodSpec& m) {
  json j;
  j["kind"] = method_kind_to_string(m.kind);
  if (m.kind == MethodKind::kMelBand) {
    j["band"] = m.mel_band;
    j["mel_bins"] = m.mel_bins;
  }
  if (m.kind == MethodKind::kHht) j["track_length"] = m.hht_track_length;
  if (m.kind == MethodKind::kExternal) {
    j["name"] = m.external_name;
    j["length"] = m.external_length;
  }
  j["output_length"] = m.output_length;
  return j;
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& defaults) {
  TrainConfig cfg = defaults;
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("learning_rate")) {
    cfg.learning_rate = j.at("learning_rate").get<double>();
  }
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
  return cfg;
}

SynthConfig::Generator generator_from_string(const std::string& s) {
  if (s == "spectral_peak") return SynthConfig::Generator::kSpectralPeak;
  if (s == "envelope_shape") return SynthConfig::Generator::kEnvelopeShape;
  if (s == "wavelet_burst") return SynthConfig::Generator::kWaveletBurst;
  throw ConfigError("unknown synthetic generator: " + s);
}

std::string generator_to_string(SynthConfig::Generator g) {
  switch (g) {
    case SynthConfig::Generator::kSpectralPeak: return "spectral_peak";
    case SynthConfig::Generator::kEnvelopeShape: return "envelope_shape";
    case SynthConfig::Generator::kWaveletBurst: return "wavelet_burst";
  }
  throw ConfigError("unknown synthetic generator");
}

// --- synthetic generators ------------------------------------------------

std::size_t spectral_bin(std::size_t L, int cls) {
  const std::size_t base = std::max<std::size_t>(3, L / 8);
  const std::size_t step = std::max<std::size_t>(2, L / 64);
  return base + step * static_cast<std::size_t>(cls);
}

void synth_signal(std::vector<float>& out, SynthConfig::Generator generator,
                  std::size_t L, int cls, int class_count, double noise,
                  Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586477;
  out.assign(L, 0.0f);
  switch (generator) {
    case SynthConfig::Generator::kSpectralPeak: {
      const std::size_t bin = spectral_bin(L, cls);
      if (bin >= L / 2) {
        throw ConfigError("too many classes for the spectral-peak generator");
      }
      const double phase = rng.uniform(0.0, kTwoPi);
      for (std::size_t t = 0; t < L; ++t) {
        out[t] = static_cast<float>(
            std::sin(kTwoPi * static_cast<double>(bin * t) / static_cast<double>(L) +
                     phase));
      }
      break;
    }
    case SynthConfig::Generator::kEnvelopeShape: {
      const std::size_t carrier = std::max<std::size_t>(4, L / 8);
      const std::size_t mod = std::min<std::size_t>(4, std::max<std::size_t>(1, L / 64));
      const double depth =
          0.15 + 0.7 * static_cast<double>(cls) /
                     static_cast<double>(std::max(1, class_count - 1));
      const double phase = rng.uniform(0.0, kTwoPi);
      const double env_phase = rng.uniform(0.0, kTwoPi);
      for (std::size_t t = 0; t < L; ++t) {
        const double pos = static_cast<double>(t) / static_cast<double>(L);
        const double envelope =
            1.0 + depth * std::sin(kTwoPi * static_cast<double>(mod) * pos + env_phase);
        out[t] = static_cast<float>(
            envelope * std::sin(kTwoPi * static_cast<double>(carrier) * pos + phase));
      }
      break;
    }
    case SynthConfig::Generator::kWaveletBurst: {
      // Haar-aligned pulse: the burst shape is identical for every class,
      // only its dyadic offset moves, so magnitude spectra carry no class
      // information while wavelet coefficients do.
      const std::size_t width = std::max<std::size_t>(4, L / 16);
      const std::size_t margin = width;
      if (L < 2 * margin + width) {
        throw ConfigError("input too short for the wavelet-burst generator");
      }
      const std::size_t avail = L - 2 * margin - width;
      std::size_t spacing =
          class_count > 1 ? avail / static_cast<std::size_t>(class_count - 1) : 0;
      spacing -= spacing % width;
      if (class_count > 1 && spacing < width) {
        throw ConfigError("too many classes for the wavelet-burst generator");
      }
      const std::size_t offset = margin + spacing * static_cast<std::size_t>(cls);
      constexpr float kAmplitude = 2.0f;
      for (std::size_t j = 0; j < width / 2; ++j) {
        out[offset + j] += kAmplitude;
        out[offset + width / 2 + j] -= kAmplitude;
      }
      break;
    }
  }
  if (noise > 0.0) {
    for (std::size_t t = 0; t < L; ++t) {
      out[t] += static_cast<float>(noise * rng.normal());
    }
  }
}

void synth_external(std::vector<float>& out, std::size_t length, int cls,
                    int class_count, Rng& rng) {
  out.assign(length, 0.0f);
  const std::size_t block = length / static_cast<std::size_t>(class_count);
  for (std::size_t j = block * static_cast<std::size_t>(cls);
       j < block * static_cast<std::size_t>(cls + 1); ++j) {
    out[j] = 3.0f;
  }
  for (std::size_t j = 0; j < length; ++j) {
    out[j] += static_cast<float>(0.5 * rng.normal());
  }
}

std::vector<const MethodSpec*> external_methods(const PipelineConfig& config) {
  std::vector<const MethodSpec*> out;
  for (const auto& m : config.methods) {
    if (m.kind == MethodKind::kExternal) out.push_back(&m);
  }
  return out;
}

Dataset synth_split(const PipelineConfig& config, const std::vector<int>& classes,
                    bool keep_labels, Rng& rng) {
  const std::size_t L = config.input_length;
  const std::size_t n = classes.size();
  Dataset data;
  data.signals = Tensor::zeros({n, L});
  data.objective = config.synth.objective;
  data.class_count = config.synth.class_count;
  if (keep_labels) data.labels = classes;

  std::vector<float> sample;
  for (std::size_t i = 0; i < n; ++i) {
    synth_signal(sample, config.synth.generator, L, classes[i],
                 config.synth.class_count, config.synth.noise_stddev, rng);
    std::copy(sample.begin(), sample.end(),
              data.signals.values.begin() + i * L);
  }
  for (const auto* ext : external_methods(config)) {
    if (ext->external_length < static_cast<std::size_t>(config.synth.class_count)) {
      throw ConfigError("external channel " + ext->external_name +
                        " is shorter than the class count");
    }
    Tensor vectors = Tensor::zeros({n, ext->external_length});
    for (std::size_t i = 0; i < n; ++i) {
      synth_external(sample, ext->external_length, classes[i],
                     config.synth.class_count, rng);
      std::copy(sample.begin(), sample.end(),
                vectors.values.begin() + i * ext->external_length);
    }
    data.externals[ext->external_name] = std::move(vectors);
  }
  return data;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  for (const char* kind : {"dft", "dwt", "raw", "hht", "periodogram"}) {
    MethodSpec m;
    m.kind = method_kind_from_string(kind);
    m.input_length = cfg.input_length;
    cfg.methods.push_back(m);
  }
  cfg.validate_and_finalize();
  return cfg;
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  try {
    PipelineConfig cfg;
    cfg.schema = j.value("schema", 1);
    cfg.seed = j.value("seed", std::uint64_t{42});
    cfg.input_length = j.value("input_length", std::size_t{256});
    cfg.code_length = j.value("code_length", std::size_t{128});
    if (j.contains("methods")) {
      for (const auto& mj : j.at("methods")) {
        cfg.methods.push_back(method_from_json(mj, cfg.input_length));
      }
    } else {
      cfg.methods = defaults().methods;
      for (auto& m : cfg.methods) {
        m.input_length = cfg.input_length;
        m.output_length = 0;
      }
    }
    cfg.compressor_train = train_config_from_json(
        j.value("compressor", json::object()), TrainConfig{50, 1e-3, 64, 0});
    cfg.mixer_train = train_config_from_json(j.value("mixer", json::object()),
                                             TrainConfig{100, 1e-3, 128, 0});
    if (j.contains("selection")) {
      const auto& sj = j.at("selection");
      const std::string kind = sj.value("classifier", "logistic");
      if (kind == "logistic") {
        cfg.selection.kind = ClassifierConfig::Kind::kLogistic;
      } else if (kind == "mlp") {
        cfg.selection.kind = ClassifierConfig::Kind::kMlp;
      } else {
        throw ConfigError("unknown classifier kind: " + kind);
      }
      const std::string metric = sj.value("metric", "accuracy");
      if (metric == "accuracy") {
        cfg.selection.metric = ClassifierConfig::Metric::kAccuracy;
      } else if (metric == "macro_f1") {
        cfg.selection.metric = ClassifierConfig::Metric::kMacroF1;
      } else {
        throw ConfigError("unknown selection metric: " + metric);
      }
      cfg.selection.epochs = sj.value("epochs", std::size_t{200});
      cfg.selection.learning_rate = sj.value("learning_rate", 0.01);
      cfg.selection.mlp_hidden = sj.value("mlp_hidden", std::size_t{64});
      cfg.selection.holdout_fraction = sj.value("holdout_fraction", 0.2);
    }
    if (j.contains("synth")) {
      const auto& sj = j.at("synth");
      cfg.synth.generator =
          generator_from_string(sj.value("generator", "spectral_peak"));
      cfg.synth.class_count = sj.value("class_count", 6);
      cfg.synth.samples_per_class = sj.value("samples_per_class", 100);
      cfg.synth.unlabeled_samples = sj.value("unlabeled_samples", 1000);
      cfg.synth.noise_stddev = sj.value("noise_stddev", 0.3);
      cfg.synth.objective = sj.value("objective", cfg.synth.objective);
    }
    cfg.validate_and_finalize();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string PipelineConfig::to_json_text() const {
  json j;
  j["schema"] = schema;
  j["seed"] = seed;
  j["input_length"] = input_length;
  j["code_length"] = code_length;
  j["methods"] = json::array();
  for (const auto& m : methods) j["methods"].push_back(method_to_json(m));
  j["compressor"] = {{"epochs", compressor_train.epochs},
                     {"learning_rate", compressor_train.learning_rate},
                     {"batch_size", compressor_train.batch_size}};
  j["mixer"] = {{"epochs", mixer_train.epochs},
                {"learning_rate", mixer_train.learning_rate},
                {"batch_size", mixer_train.batch_size}};
  j["selection"] = {
      {"classifier",
       selection.kind == ClassifierConfig::Kind::kLogistic ? "logistic" : "mlp"},
      {"metric",
       selection.metric == ClassifierConfig::Metric::kAccuracy ? "accuracy"
                                                               : "macro_f1"},
      {"epochs", selection.epochs},
      {"learning_rate", selection.learning_rate},
      {"mlp_hidden", selection.mlp_hidden},
      {"holdout_fraction", selection.holdout_fraction}};
  j["synth"] = {{"generator", generator_to_string(synth.generator)},
                {"class_count", synth.class_count},
                {"samples_per_class", synth.samples_per_class},
                {"unlabeled_samples", synth.unlabeled_samples},
                {"noise_stddev", synth.noise_stddev},
                {"objective", synth.objective}};
  return j.dump(2) + "\n";
}

void PipelineConfig::validate_and_finalize() {
  if (schema != 1) {
    throw ConfigError("unsupported config schema: " + std::to_string(schema));
  }
  if (methods.empty()) throw ConfigError("the method set must be nonempty");
  if (input_length < 8) throw ConfigError("input length must be >= 8");
  if (code_length == 0) throw ConfigError("code length must be positive");
  std::set<std::string> seen;
  for (auto& m : methods) {
    m.input_length = input_length;
    m.finalize(code_length);
    if (!seen.insert(m.id()).second) {
      throw ConfigError("duplicate method id in the registry: " + m.id());
    }
  }
  compressor_train.validate();
  mixer_train.validate();
  if (synth.class_count < 2) throw ConfigError("synth needs >= 2 classes");
  if (synth.samples_per_class < 2) {
    throw ConfigError("synth needs >= 2 samples per class");
  }
  if (synth.unlabeled_samples < 1) {
    throw ConfigError("synth needs >= 1 unlabeled sample");
  }
  if (synth.noise_stddev < 0.0 || !std::isfinite(synth.noise_stddev)) {
    throw ConfigError("synth noise stddev must be finite and >= 0");
  }
}

std::vector<std::string> PipelineConfig::method_ids() const {
  std::vector<std::string> ids;
  ids.reserve(methods.size());
  for (const auto& m : methods) ids.push_back(m.id());
  return ids;
}

SynthResult synth_dataset(const PipelineConfig& config, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kSynthTag));
  const int k = config.synth.class_count;

  std::vector<int> unlabeled_classes(
      static_cast<std::size_t>(config.synth.unlabeled_samples));
  for (auto& c : unlabeled_classes) {
    c = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  }
  std::vector<int> labeled_classes;
  labeled_classes.reserve(static_cast<std::size_t>(k) *
                          static_cast<std::size_t>(config.synth.samples_per_class));
  for (int c = 0; c < k; ++c) {
    for (int s = 0; s < config.synth.samples_per_class; ++s) {
      labeled_classes.push_back(c);
    }
  }

  SynthResult result;
  result.unlabeled = synth_split(config, unlabeled_classes, false, rng);
  result.labeled = synth_split(config, labeled_classes, true, rng);
  return result;
}

void write_dataset(const std::string& dir, const SynthResult& data,
                   const PipelineConfig& config, std::uint64_t seed) {
  fs::create_directories(dir);
  sgtf::write((fs::path(dir) / "unlabeled.sgtf").string(), data.unlabeled.signals);
  sgtf::write((fs::path(dir) / "labeled.sgtf").string(), data.labeled.signals);

  const auto& labels = *data.labeled.labels;
  Tensor label_tensor = Tensor::zeros({labels.size()});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    label_tensor.values[i] = static_cast<float>(labels[i]);
  }
  sgtf::write((fs::path(dir) / "labels.sgtf").string(), label_tensor);

  json meta;
  meta["schema"] = 1;
  meta["kind"] = "sgsm-dataset";
  meta["objective"] = data.labeled.objective;
  meta["class_count"] = data.labeled.class_count;
  meta["generator"] = generator_to_string(config.synth.generator);
  meta["noise_stddev"] = config.synth.noise_stddev;
  meta["seed"] = seed;
  meta["sequence_length"] = config.input_length;
  meta["unlabeled_samples"] = data.unlabeled.sample_count();
  meta["labeled_samples"] = data.labeled.sample_count();
  meta["externals"] = json::array();
  for (const auto& [name, tensor] : data.labeled.externals) {
    meta["externals"].push_back(name);
    sgtf::write((fs::path(dir) / ("external_" + name + ".labeled.sgtf")).string(),
                tensor);
  }
  for (const auto& [name, tensor] : data.unlabeled.externals) {
    sgtf::write(
        (fs::path(dir) / ("external_" + name + ".unlabeled.sgtf")).string(),
        tensor);
  }
  write_json_file((fs::path(dir) / "dataset.json").string(), meta);
}

Dataset load_dataset(const PipelineConfig& config, const std::string& dir,
                     const std::string& split) {
  if (split != "labeled" && split != "unlabeled") {
    throw InvalidArgument("split must be 'labeled' or 'unlabeled'");
  }
  Dataset data;
  data.signals = sgtf::read((fs::path(dir) / (split + ".sgtf")).string());
  if (data.signals.ndim() != 2 && data.signals.ndim() != 3) {
    throw DataError("dataset signals must be [N x L] or [N x C x L]");
  }
  if (data.signals.shape.back() != config.input_length) {
    throw DataError("dataset sequence length " +
                    std::to_string(data.signals.shape.back()) +
                    " does not match the configured input length " +
                    std::to_string(config.input_length));
  }

  if (split == "labeled") {
    const json meta =
        read_json_file((fs::path(dir) / "dataset.json").string(), "sgsm-dataset");
    data.class_count = meta.at("class_count").get<int>();
    data.objective = meta.value("objective", "classification");
    const Tensor labels = sgtf::read((fs::path(dir) / "labels.sgtf").string());
    if (labels.ndim() != 1 || labels.dim(0) != data.signals.dim(0)) {
      throw DataError("labels do not match the labeled sample count");
    }
    std::vector<int> label_values(labels.values.size());
    for (std::size_t i = 0; i < labels.values.size(); ++i) {
      label_values[i] = static_cast<int>(std::lround(labels.values[i]));
    }
    data.labels = std::move(label_values);
  }

  for (const auto* ext : external_methods(config)) {
    const std::string path =
        (fs::path(dir) / ("external_" + ext->external_name + "." + split + ".sgtf"))
            .string();
    Tensor vectors = sgtf::read(path);
    if (vectors.ndim() != 2 || vectors.dim(1) != ext->external_length) {
      throw DataError("external vectors in " + path + " must be [N x " +
                      std::to_string(ext->external_length) + "]");
    }
    if (vectors.dim(0) != data.signals.dim(0)) {
      throw DataError("external vectors in " + path +
                      " do not match the sample count");
    }
    data.externals[ext->external_name] = std::move(vectors);
  }
  return data;
}

std::vector<TransformedSequence> channel_inputs(const PipelineConfig& config,
                                                std::size_t channel,
                                                const Dataset& data) {
  if (channel >= config.methods.size()) {
    throw InvalidArgument("channel index out of range");
  }
  const MethodSpec& spec = config.methods[channel];
  std::vector<TransformedSequence> out;

  if (spec.kind == MethodKind::kExternal) {
    const auto it = data.externals.find(spec.external_name);
    if (it == data.externals.end()) {
      throw DataError("dataset provides no vectors for external channel " +
                      spec.external_name);
    }
    const Tensor& vectors = it->second;
    out.reserve(vectors.dim(0));
    std::vector<double> row(spec.external_length);
    for (std::size_t i = 0; i < vectors.dim(0); ++i) {
      for (std::size_t k = 0; k < spec.external_length; ++k) {
        row[k] = static_cast<double>(vectors.values[i * spec.external_length + k]);
      }
      out.push_back(wrap_external(spec, row));
    }
    return out;
  }

  const std::size_t sequences = data.sample_count() * data.sequences_per_sample();
  const std::size_t length = data.sequence_length();
  out.reserve(sequences);
  SignalSequence x;
  x.values.resize(length);
  for (std::size_t s = 0; s < sequences; ++s) {
    const float* src = data.signals.values.data() + s * length;
    for (std::size_t k = 0; k < length; ++k) {
      x.values[k] = static_cast<double>(src[k]);
    }
    out.push_back(apply_method(spec, x));
  }
  return out;
}

namespace {

std::vector<float> pack_rows(const std::vector<TransformedSequence>& seqs,
                             std::size_t dim) {
  std::vector<float> rows;
  rows.reserve(seqs.size() * dim);
  for (const auto& t : seqs) {
    if (t.length() != dim) {
      throw InvalidArgument("transformed sequence length mismatch while packing");
    }
    for (double v : t.values) rows.push_back(static_cast<float>(v));
  }
  return rows;
}

// Encodes every row through the channel's trained compressor.
std::vector<std::vector<float>> encode_rows(const CompressorModel& model,
                                            const std::vector<float>& rows,
                                            std::size_t count) {
  std::vector<std::vector<float>> codes;
  codes.reserve(count);
  Network::Activations trace;
  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < count; start += kBatch) {
    const std::size_t b = std::min(kBatch, count - start);
    model.encoder.forward_batch(rows.data() + start * model.input_length, b,
                                trace);
    const auto& out = trace.acts.back();
    for (std::size_t i = 0; i < b; ++i) {
      codes.emplace_back(out.begin() + i * model.code_length,
                         out.begin() + (i + 1) * model.code_length);
    }
  }
  return codes;
}

}  // namespace

SgsmInstance train_compressors_only(const PipelineConfig& config,
                                    const Dataset& unlabeled) {
  SgsmInstance instance;
  instance.config = config;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const MethodSpec& spec = config.methods[i];
    const auto inputs = channel_inputs(config, i, unlabeled);
    CompressorModel model = CompressorModel::create(
        spec.id(), spec.output_length, config.code_length,
        derive_seed(config.seed, derive_seed(kCompressorTag, i)));
    TrainConfig cfg = config.compressor_train;
    cfg.seed = derive_seed(config.seed, derive_seed(kCompressorTag, 0x1000 + i));
    instance.compressor_logs.push_back(train_compressor(model, inputs, cfg));
    instance.compressors.push_back(std::move(model));
  }
  return instance;
}

void train_mixer_stage(SgsmInstance& instance, const Dataset& unlabeled) {
  const PipelineConfig& config = instance.config;
  if (instance.compressors.size() != config.methods.size()) {
    throw InvalidArgument("compressors must be trained before the mixer");
  }
  const auto codes = concat_codes_for(instance, unlabeled);
  MixerModel mixer =
      MixerModel::create(config.channel_count(), config.code_length,
                         derive_seed(config.seed, kMixerTag));
  TrainConfig cfg = config.mixer_train;
  cfg.seed = derive_seed(config.seed, derive_seed(kMixerTag, 0x1000));
  instance.mixer_log = train_mixer(mixer, codes, cfg);
  instance.mixer = std::move(mixer);
}

SgsmInstance pretrain(const PipelineConfig& config, const Dataset& unlabeled) {
  SgsmInstance instance = train_compressors_only(config, unlabeled);
  train_mixer_stage(instance, unlabeled);
  return instance;
}

std::vector<ConcatCode> concat_codes_for(const SgsmInstance& instance,
                                         const Dataset& data) {
  const PipelineConfig& config = instance.config;
  if (instance.compressors.size() != config.methods.size()) {
    throw InvalidArgument("instance has no trained compressors");
  }
  const std::size_t samples = data.sample_count();
  const std::size_t per_sample = data.sequences_per_sample();
  const std::size_t sequences = samples * per_sample;

  // Per-channel code tables; external channels hold one code per sample and
  // are broadcast across the sample's sequences.
  std::vector<std::vector<std::vector<float>>> channel_codes(
      config.methods.size());
  for (std::size_t c = 0; c < config.methods.size(); ++c) {
    const auto inputs = channel_inputs(config, c, data);
    const auto rows = pack_rows(inputs, instance.compressors[c].input_length);
    channel_codes[c] =
        encode_rows(instance.compressors[c], rows, inputs.size());
  }

  std::vector<ConcatCode> out;
  out.reserve(sequences);
  std::vector<std::vector<float>> per_channel(config.methods.size());
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t sample = s / per_sample;
    for (std::size_t c = 0; c < config.methods.size(); ++c) {
      const bool external = config.methods[c].kind == MethodKind::kExternal;
      per_channel[c] = channel_codes[c][external ? sample : s];
    }
    out.push_back(concat_codes(per_channel));
  }
  return out;
}

Tensor embed_dataset(const SgsmInstance& instance, const Dataset& data,
                     const MaskConfig& mask) {
  if (!instance.trained()) {
    throw InvalidArgument("instance must be pre-trained before embedding");
  }
  mask.validate();
  const auto codes = concat_codes_for(instance, data);
  const std::size_t nd = instance.mixer->embedding_length();
  const std::size_t samples = data.sample_count();
  const std::size_t per_sample = data.sequences_per_sample();

  Tensor out = per_sample == 1
                   ? Tensor::zeros({samples, nd})
                   : Tensor::zeros({samples, per_sample, nd});
  for (std::size_t s = 0; s < codes.size(); ++s) {
    const auto embedding = instance.mixer->embed(codes[s], mask);
    std::copy(embedding.begin(), embedding.end(),
              out.values.begin() + s * nd);
  }
  return out;
}

SelectionResult run_selection(const SgsmInstance& instance, const Dataset& data,
                              std::vector<MaskConfig> masks,
                              std::uint64_t seed) {
  if (!instance.trained()) {
    throw InvalidArgument("instance must be pre-trained before selection");
  }
  if (!data.labels.has_value()) {
    throw DataError("selection needs a labeled dataset");
  }
  if (masks.empty()) masks = enumerate_masks(instance.config.channel_count());
  for (auto& m : masks) {
    if (m.channel_count() != instance.config.channel_count()) {
      throw InvalidArgument("mask " + m.to_string() +
                            " does not match the channel count");
    }
  }

  const auto codes = concat_codes_for(instance, data);
  const std::size_t nd = instance.mixer->embedding_length();
  const std::size_t samples = data.sample_count();
  const std::size_t per_sample = data.sequences_per_sample();

  EmbeddingProvider provider = [&](const MaskConfig& mask) {
    Tensor out = per_sample == 1
                     ? Tensor::zeros({samples, nd})
                     : Tensor::zeros({samples, per_sample, nd});
    for (std::size_t s = 0; s < codes.size(); ++s) {
      const auto embedding = instance.mixer->embed(codes[s], mask);
      std::copy(embedding.begin(), embedding.end(),
                out.values.begin() + s * nd);
    }
    return out;
  };
  return select_best(provider, *data.labels, data.class_count, data.objective,
                     masks, seed, instance.config.selection);
}

void save_compressors(const SgsmInstance& instance, const std::string& dir) {
  fs::create_directories(dir);
  const PipelineConfig& config = instance.config;

  json meta;
  meta["schema"] = 1;
  meta["kind"] = "sgsm-instance";
  meta["channel_count"] = config.channel_count();
  meta["code_length"] = config.code_length;
  meta["input_length"] = config.input_length;
  meta["seed"] = config.seed;
  meta["methods"] = config.method_ids();
  write_json_file((fs::path(dir) / "instance.json").string(), meta);

  for (std::size_t i = 0; i < instance.compressors.size(); ++i) {
    const auto& model = instance.compressors[i];
    const std::string stem = "compressor_" + model.method_id;
    json manifest;
    manifest["schema"] = 1;
    manifest["kind"] = "sgsm-checkpoint";
    manifest["model"] = "compressor";
    manifest["method_id"] = model.method_id;
    manifest["input_length"] = model.input_length;
    manifest["code_length"] = model.code_length;
    manifest["seed"] = config.seed;
    manifest["epochs"] = i < instance.compressor_logs.size()
                             ? instance.compressor_logs[i].epoch_loss.size()
                             : 0;
    manifest["loss_history"] = i < instance.compressor_logs.size()
                                   ? instance.compressor_logs[i].epoch_loss
                                   : std::vector<double>{};
    std::size_t file_index = 0;
    save_network_params(model.encoder, dir, stem, file_index,
                        manifest["encoder"]);
    save_network_params(model.decoder, dir, stem, file_index,
                        manifest["decoder"]);
    write_json_file((fs::path(dir) / (stem + ".sgtf.json")).string(), manifest);
  }
}

void save_instance(const SgsmInstance& instance, const std::string& dir) {
  save_compressors(instance, dir);
  if (!instance.mixer.has_value()) return;

  const auto& mixer = *instance.mixer;
  json manifest;
  manifest["schema"] = 1;
  manifest["kind"] = "sgsm-checkpoint";
  manifest["model"] = "mixer";
  manifest["channel_count"] = mixer.channel_count;
  manifest["code_length"] = mixer.code_length;
  manifest["seed"] = instance.config.seed;
  manifest["epochs"] = instance.mixer_log.epoch_loss.size();
  manifest["loss_history"] = instance.mixer_log.epoch_loss;
  std::size_t file_index = 0;
  save_network_params(mixer.encoder, dir, "mixer", file_index,
                      manifest["encoder"]);
  save_network_params(mixer.decoder, dir, "mixer", file_index,
                      manifest["decoder"]);
  write_json_file((fs::path(dir) / "mixer.sgtf.json").string(), manifest);
}

SgsmInstance load_instance(const PipelineConfig& config, const std::string& dir,
                           bool require_mixer) {
  const json meta =
      read_json_file((fs::path(dir) / "instance.json").string(), "sgsm-instance");
  if (meta.at("channel_count").get<std::size_t>() != config.channel_count() ||
      meta.at("code_length").get<std::size_t>() != config.code_length ||
      meta.at("input_length").get<std::size_t>() != config.input_length ||
      meta.at("methods").get<std::vector<std::string>>() != config.method_ids()) {
    throw ConfigError("checkpoints in " + dir +
                      " were produced by a different configuration");
  }

  SgsmInstance instance;
  instance.config = config;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const MethodSpec& spec = config.methods[i];
    const std::string stem = "compressor_" + spec.id();
    const json manifest = read_json_file(
        (fs::path(dir) / (stem + ".sgtf.json")).string(), "sgsm-checkpoint");
    if (manifest.at("model") != "compressor" ||
        manifest.at("method_id") != spec.id() ||
        manifest.at("input_length").get<std::size_t>() != spec.output_length ||
        manifest.at("code_length").get<std::size_t>() != config.code_length) {
      throw ConfigError("checkpoint " + stem + " does not match the config");
    }
    CompressorModel model = CompressorModel::create(
        spec.id(), spec.output_length, config.code_length,
        derive_seed(config.seed, derive_seed(kCompressorTag, i)));
    load_network_params(model.encoder, dir, manifest.at("encoder"),
                        stem + " encoder");
    load_network_params(model.decoder, dir, manifest.at("decoder"),
                        stem + " decoder");
    TrainLog log;
    log.epoch_loss = manifest.value("loss_history", std::vector<double>{});
    instance.compressor_logs.push_back(std::move(log));
    instance.compressors.push_back(std::move(model));
  }

  const fs::path mixer_manifest_path = fs::path(dir) / "mixer.sgtf.json";
  if (fs::exists(mixer_manifest_path)) {
    const json manifest =
        read_json_file(mixer_manifest_path.string(), "sgsm-checkpoint");
    if (manifest.at("model") != "mixer" ||
        manifest.at("channel_count").get<std::size_t>() !=
            config.channel_count() ||
        manifest.at("code_length").get<std::size_t>() != config.code_length) {
      throw ConfigError("mixer checkpoint does not match the config");
    }
    MixerModel mixer =
        MixerModel::create(config.channel_count(), config.code_length,
                           derive_seed(config.seed, kMixerTag));
    load_network_params(mixer.encoder, dir, manifest.at("encoder"),
                        "mixer encoder");
    load_network_params(mixer.decoder, dir, manifest.at("decoder"),
                        "mixer decoder");
    instance.mixer_log.epoch_loss =
        manifest.value("loss_history", std::vector<double>{});
    instance.mixer = std::move(mixer);
  } else if (require_mixer) {
    throw DataError("no mixer checkpoint in " + dir +
                    "; run the mixer training stage first");
  }
  return instance;
}

}  // namespace sgsm

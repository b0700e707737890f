/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "errors.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "rng.hpp"

using namespace sgsm;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sgsm_pipeline_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

// Small three-channel setup that exercises conv + spectral + wavelet paths
// while staying fast enough for a unit suite.
PipelineConfig tiny_config() {
  return PipelineConfig::from_json_text(R"({
    "schema": 1,
    "seed": 99,
    "input_length": 64,
    "code_length": 8,
    "methods": [{"kind": "dft"}, {"kind": "raw"}, {"kind": "dwt"}],
    "compressor": {"epochs": 3, "batch_size": 16},
    "mixer": {"epochs": 4, "batch_size": 16},
    "selection": {"epochs": 80},
    "synth": {"class_count": 3, "samples_per_class": 10,
              "unlabeled_samples": 60, "noise_stddev": 0.2}
  })");
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::map<std::string, std::string> snapshot_dir(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    out[entry.path().filename().string()] = file_bytes(entry.path());
  }
  return out;
}

}  // namespace

TEST_CASE("default config matches the published registry and scales") {
  const auto cfg = PipelineConfig::defaults();
  CHECK(cfg.code_length == 128);
  CHECK(cfg.input_length == 256);
  CHECK(cfg.channel_count() == 5);
  CHECK(cfg.method_ids() ==
        std::vector<std::string>{"dft", "dwt", "raw", "hht", "periodogram"});
  CHECK(cfg.embedding_length() == 640);  // five 128-long codes
  CHECK(cfg.compressor_train.epochs == 50);
  CHECK(cfg.compressor_train.batch_size == 64);
  CHECK(cfg.compressor_train.learning_rate == 0.001);
  CHECK(cfg.mixer_train.epochs == 100);
  CHECK(cfg.mixer_train.batch_size == 128);
  CHECK(cfg.mixer_train.learning_rate == 0.001);
}

TEST_CASE("config json round trip") {
  const auto cfg = tiny_config();
  const auto text = cfg.to_json_text();
  const auto back = PipelineConfig::from_json_text(text);
  CHECK(back.to_json_text() == text);
  CHECK(back.method_ids() == cfg.method_ids());
}

TEST_CASE("config validation failures") {
  CHECK_THROWS_AS(PipelineConfig::from_json_text("{nope"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"schema": 2})"),
                  ConfigError);
  // no methods
  CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"methods": []})"),
                  ConfigError);
  // undercompleteness violated: dft of 64 gives 33 <= d=40
  CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({
    "input_length": 64, "code_length": 40, "methods": [{"kind": "dft"}]
  })"),
                  ConfigError);
  // dwt needs a power of two
  CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({
    "input_length": 96, "code_length": 8, "methods": [{"kind": "dwt"}]
  })"),
                  ConfigError);
  // duplicate channel ids
  CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({
    "input_length": 64, "code_length": 8,
    "methods": [{"kind": "raw"}, {"kind": "raw"}]
  })"),
                  ConfigError);
  // unknown method kind
  CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({
    "methods": [{"kind": "stft"}]
  })"),
                  ConfigError);
}

TEST_CASE("synthetic datasets are deterministic per seed") {
  const auto cfg = tiny_config();
  const auto a = synth_dataset(cfg, 5);
  const auto b = synth_dataset(cfg, 5);
  const auto c = synth_dataset(cfg, 6);
  CHECK(a.unlabeled.signals.values == b.unlabeled.signals.values);
  CHECK(a.labeled.signals.values == b.labeled.signals.values);
  CHECK(*a.labeled.labels == *b.labeled.labels);
  CHECK(a.unlabeled.signals.values != c.unlabeled.signals.values);
  CHECK(a.labeled.sample_count() == 30);
  CHECK(a.unlabeled.sample_count() == 60);
}

TEST_CASE("noise-free spectral peaks are separated by the dft argmax") {
  auto cfg = tiny_config();
  cfg.synth.noise_stddev = 0.0;
  const auto data = synth_dataset(cfg, 3);
  const auto& labels = *data.labeled.labels;
  std::map<int, std::size_t> class_bin;
  for (std::size_t i = 0; i < data.labeled.sample_count(); ++i) {
    std::vector<double> x(cfg.input_length);
    for (std::size_t k = 0; k < cfg.input_length; ++k) {
      x[k] = data.labeled.signals.values[i * cfg.input_length + k];
    }
    const auto mag = dft_magnitude(x);
    std::size_t best = 1;
    for (std::size_t k = 1; k < mag.size(); ++k) {
      if (mag[k] > mag[best]) best = k;
    }
    auto [it, inserted] = class_bin.emplace(labels[i], best);
    if (!inserted) CHECK(it->second == best);  // one bin per class
  }
  CHECK(class_bin.size() == 3);  // three distinct bins
}

TEST_CASE("dft features beat raw signals under nearest-centroid at noise 0.3") {
  auto cfg = tiny_config();
  cfg.synth.noise_stddev = 0.3;
  cfg.synth.samples_per_class = 30;
  const auto data = synth_dataset(cfg, 4);
  const auto& labels = *data.labeled.labels;
  const std::size_t n = data.labeled.sample_count();
  const std::size_t L = cfg.input_length;

  auto nearest_centroid_accuracy =
      [&](const std::vector<std::vector<double>>& feats) {
        std::map<int, std::vector<double>> centroid;
        std::map<int, int> counts;
        for (std::size_t i = 0; i < n; i += 2) {  // even rows train
          auto& c = centroid[labels[i]];
          c.resize(feats[i].size(), 0.0);
          for (std::size_t k = 0; k < feats[i].size(); ++k) c[k] += feats[i][k];
          counts[labels[i]] += 1;
        }
        for (auto& [cls, c] : centroid) {
          for (auto& v : c) v /= counts[cls];
        }
        int hits = 0, total = 0;
        for (std::size_t i = 1; i < n; i += 2) {  // odd rows test
          double best = 1e300;
          int best_cls = -1;
          for (const auto& [cls, c] : centroid) {
            double dist = 0.0;
            for (std::size_t k = 0; k < c.size(); ++k) {
              dist += (feats[i][k] - c[k]) * (feats[i][k] - c[k]);
            }
            if (dist < best) {
              best = dist;
              best_cls = cls;
            }
          }
          hits += best_cls == labels[i];
          ++total;
        }
        return static_cast<double>(hits) / total;
      };

  std::vector<std::vector<double>> raw_feats(n), dft_feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw_feats[i].resize(L);
    for (std::size_t k = 0; k < L; ++k) {
      raw_feats[i][k] = data.labeled.signals.values[i * L + k];
    }
    dft_feats[i] = dft_magnitude(raw_feats[i]);
  }
  const double raw_acc = nearest_centroid_accuracy(raw_feats);
  const double dft_acc = nearest_centroid_accuracy(dft_feats);
  CHECK(dft_acc > raw_acc);
  CHECK(dft_acc > 0.9);  // spectra separate the task almost perfectly
}

TEST_CASE("wavelet burst classes share their magnitude spectrum") {
  auto cfg = tiny_config();
  cfg.synth.noise_stddev = 0.0;
  cfg.synth.generator = SynthConfig::Generator::kWaveletBurst;
  const auto data = synth_dataset(cfg, 8);
  const std::size_t L = cfg.input_length;
  // class information must be invisible to |DFT|: compare spectra of the
  // first samples of two different classes
  std::vector<double> a(L), b(L);
  const auto& labels = *data.labeled.labels;
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) ia = i;
    if (labels[i] == 2) ib = i;
  }
  for (std::size_t k = 0; k < L; ++k) {
    a[k] = data.labeled.signals.values[ia * L + k];
    b[k] = data.labeled.signals.values[ib * L + k];
  }
  CHECK(oracle::max_abs_diff(dft_magnitude(a), dft_magnitude(b)) < 1e-6);
  // while the signals themselves differ
  CHECK(oracle::max_abs_diff(a, b) > 1.0);
}

TEST_CASE("dataset write and load round trip") {
  const auto cfg = tiny_config();
  const auto dir = fresh_dir("dataset_roundtrip");
  const auto data = synth_dataset(cfg, 7);
  write_dataset(dir, data, cfg, 7);

  const auto unlabeled = load_dataset(cfg, dir, "unlabeled");
  CHECK(unlabeled.sample_count() == 60);
  CHECK_FALSE(unlabeled.labels.has_value());
  const auto labeled = load_dataset(cfg, dir, "labeled");
  CHECK(labeled.sample_count() == 30);
  REQUIRE(labeled.labels.has_value());
  CHECK(*labeled.labels == *data.labeled.labels);
  CHECK(labeled.class_count == 3);
  CHECK(labeled.signals.values == data.labeled.signals.values);

  CHECK_THROWS_AS(load_dataset(cfg, dir, "bogus"), InvalidArgument);
  CHECK_THROWS_AS(load_dataset(cfg, fresh_dir("nothing_here"), "labeled"),
                  DataError);
}

TEST_CASE("pretrain produces a full instance deterministically") {
  const auto cfg = tiny_config();
  const auto data = synth_dataset(cfg, cfg.seed);

  const auto instance = pretrain(cfg, data.unlabeled);
  CHECK(instance.trained());
  CHECK(instance.compressors.size() == 3);
  REQUIRE(instance.compressor_logs.size() == 3);
  for (const auto& log : instance.compressor_logs) {
    CHECK(log.epoch_loss.size() == 3);
    for (double loss : log.epoch_loss) CHECK(std::isfinite(loss));
  }
  CHECK(instance.mixer_log.epoch_loss.size() == 4);

  // checkpoint artifact count: one manifest per compressor, one mixer
  // manifest, instance.json, and the parameter tensors
  const auto dir = fresh_dir("pretrain_artifacts");
  save_instance(instance, dir);
  CHECK(fs::exists(fs::path(dir) / "instance.json"));
  CHECK(fs::exists(fs::path(dir) / "compressor_dft.sgtf.json"));
  CHECK(fs::exists(fs::path(dir) / "compressor_raw.sgtf.json"));
  CHECK(fs::exists(fs::path(dir) / "compressor_dwt.sgtf.json"));
  CHECK(fs::exists(fs::path(dir) / "mixer.sgtf.json"));

  // bitwise-identical checkpoints on a rerun with the same seed
  const auto rerun = pretrain(cfg, data.unlabeled);
  const auto dir2 = fresh_dir("pretrain_artifacts_rerun");
  save_instance(rerun, dir2);
  const auto snap1 = snapshot_dir(dir);
  const auto snap2 = snapshot_dir(dir2);
  REQUIRE(snap1.size() == snap2.size());
  for (const auto& [name, bytes] : snap1) {
    REQUIRE(snap2.count(name) == 1);
    CHECK(snap2.at(name) == bytes);
  }
}

TEST_CASE("save and load round trip reproduces the instance exactly") {
  const auto cfg = tiny_config();
  const auto data = synth_dataset(cfg, cfg.seed);
  const auto instance = pretrain(cfg, data.unlabeled);
  const auto dir = fresh_dir("instance_roundtrip");
  save_instance(instance, dir);

  const auto loaded = load_instance(cfg, dir);
  CHECK(loaded.trained());
  const auto dir2 = fresh_dir("instance_roundtrip_resave");
  save_instance(loaded, dir2);
  CHECK(snapshot_dir(dir) == snapshot_dir(dir2));

  // a mismatching config is rejected
  auto other = tiny_config();
  other.code_length = 4;
  other.validate_and_finalize();
  CHECK_THROWS_AS(load_instance(other, dir), ConfigError);
}

TEST_CASE("embedding shapes, mask sensitivity, and frozen checkpoints") {
  const auto cfg = tiny_config();
  const auto data = synth_dataset(cfg, cfg.seed);
  const auto instance = pretrain(cfg, data.unlabeled);
  const auto dir = fresh_dir("frozen_checkpoints");
  save_instance(instance, dir);
  const auto before = snapshot_dir(dir);

  const auto all_open = embed_dataset(instance, data.labeled,
                                      MaskConfig::all_open(3));
  CHECK(all_open.shape == std::vector<std::uint64_t>{30, 24});

  const auto masked = embed_dataset(instance, data.labeled,
                                    MaskConfig::from_string("TFF"));
  CHECK(masked.shape == all_open.shape);
  CHECK(masked.values != all_open.values);

  // embedding twice with different data leaves checkpoints untouched
  const auto other_task = synth_dataset(cfg, 1234);
  embed_dataset(instance, other_task.labeled, MaskConfig::all_open(3));
  CHECK(snapshot_dir(dir) == before);
}

TEST_CASE("multi-sequence samples embed to [N x C x nd]") {
  const auto cfg = tiny_config();
  const auto base = synth_dataset(cfg, cfg.seed);
  const auto instance = pretrain(cfg, base.unlabeled);

  // reshape 30 single-sequence samples into 10 samples of 3 sequences
  Dataset multi = base.labeled;
  multi.signals.shape = {10, 3, cfg.input_length};
  multi.labels = std::vector<int>{0, 0, 0, 0, 1, 1, 1, 2, 2, 2};

  const auto emb = embed_dataset(instance, multi, MaskConfig::all_open(3));
  CHECK(emb.shape == std::vector<std::uint64_t>{10, 3, 24});

  // rows equal the single-sequence embeddings of the same sequences
  const auto flat = embed_dataset(instance, base.labeled,
                                  MaskConfig::all_open(3));
  CHECK(emb.values == flat.values);
}

TEST_CASE("run_selection sweeps masks and respects explicit subsets") {
  const auto cfg = tiny_config();
  const auto data = synth_dataset(cfg, cfg.seed);
  const auto instance = pretrain(cfg, data.unlabeled);

  const auto full = run_selection(instance, data.labeled, {}, 21);
  CHECK(full.reports.size() == 7);  // 2^3 - 1
  CHECK(full.margin >= 0.0);
  // channel order in reports equals registry order
  CHECK(full.reports[0].mask.to_string() == "TTT");
  CHECK(full.reports[1].mask.to_string() == "TTF");

  const auto subset = run_selection(
      instance, data.labeled,
      {MaskConfig::from_string("TTT"), MaskConfig::from_string("FFT")}, 21);
  CHECK(subset.reports.size() == 2);
  CHECK(subset.reports[0].mask.to_string() == "TTT");
  CHECK(subset.reports[1].mask.to_string() == "FFT");

  // deterministic: identical sweep twice
  const auto again = run_selection(instance, data.labeled, {}, 21);
  CHECK(report_to_json(again) == report_to_json(full));
}

TEST_CASE("external channels flow through synth, pretrain, and embedding") {
  const auto cfg = PipelineConfig::from_json_text(R"({
    "schema": 1,
    "seed": 31,
    "input_length": 64,
    "code_length": 8,
    "methods": [{"kind": "raw"},
                {"kind": "external", "name": "probe", "length": 24}],
    "compressor": {"epochs": 3, "batch_size": 16},
    "mixer": {"epochs": 3, "batch_size": 16},
    "synth": {"class_count": 3, "samples_per_class": 8,
              "unlabeled_samples": 40, "noise_stddev": 0.2}
  })");
  CHECK(cfg.method_ids() == std::vector<std::string>{"raw", "ext_probe"});

  const auto data = synth_dataset(cfg, cfg.seed);
  REQUIRE(data.labeled.externals.count("probe") == 1);
  CHECK(data.labeled.externals.at("probe").shape ==
        std::vector<std::uint64_t>{24, 24});

  const auto dir = fresh_dir("external_dataset");
  write_dataset(dir, data, cfg, cfg.seed);
  CHECK(fs::exists(fs::path(dir) / "external_probe.labeled.sgtf"));
  CHECK(fs::exists(fs::path(dir) / "external_probe.unlabeled.sgtf"));

  const auto instance = pretrain(cfg, data.unlabeled);
  CHECK(instance.compressors[1].method_id == "ext_probe");
  const auto emb = embed_dataset(instance, data.labeled,
                                 MaskConfig::all_open(2));
  CHECK(emb.shape == std::vector<std::uint64_t>{24, 16});

  // a dataset without the external file is rejected
  Dataset missing = data.labeled;
  missing.externals.clear();
  CHECK_THROWS_AS(embed_dataset(instance, missing, MaskConfig::all_open(2)),
                  DataError);
}

TEST_CASE("mel-band registry embeds flattened spectrograms") {
  // Four quarter-band channels over [64 x 18] spectrograms arriving as
  // flattened rows, the acoustic-style registry.
  const auto cfg = PipelineConfig::from_json_text(R"({
    "schema": 1,
    "seed": 71,
    "input_length": 1152,
    "code_length": 8,
    "methods": [{"kind": "mel_band", "band": 1}, {"kind": "mel_band", "band": 2},
                {"kind": "mel_band", "band": 3}, {"kind": "mel_band", "band": 4}],
    "compressor": {"epochs": 2, "batch_size": 8},
    "mixer": {"epochs": 2, "batch_size": 8}
  })");
  CHECK(cfg.method_ids() ==
        std::vector<std::string>{"mel1", "mel2", "mel3", "mel4"});
  CHECK(cfg.methods[0].output_length == 18);

  Rng rng(72);
  Dataset unlabeled;
  unlabeled.signals = Tensor::zeros({24, 1152});
  for (auto& v : unlabeled.signals.values) {
    v = static_cast<float>(std::abs(rng.normal()));
  }
  const auto instance = pretrain(cfg, unlabeled);
  CHECK(instance.trained());

  Dataset labeled = unlabeled;
  labeled.labels = std::vector<int>(24);
  for (std::size_t i = 0; i < 24; ++i) (*labeled.labels)[i] = i % 2;
  labeled.class_count = 2;
  const auto emb = embed_dataset(instance, labeled, MaskConfig::all_open(4));
  CHECK(emb.shape == std::vector<std::uint64_t>{24, 32});
}

TEST_CASE("selection needs labels and a trained instance") {
  const auto cfg = tiny_config();
  const auto data = synth_dataset(cfg, cfg.seed);
  SgsmInstance untrained;
  untrained.config = cfg;
  CHECK_THROWS_AS(run_selection(untrained, data.labeled, {}, 1),
                  InvalidArgument);
  const auto instance = pretrain(cfg, data.unlabeled);
  CHECK_THROWS_AS(run_selection(instance, data.unlabeled, {}, 1), DataError);
}

/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 *
 * Acceptance suite. Runs every acceptance criterion end to end at its
 * stated tolerance and prints one pass/fail line per criterion:
 *
 *   1. DSP oracles (DFT vs direct summation, Haar energy/inversion,
 *      periodogram composition, EMD completeness) under 30 s.
 *   2. Loss hand values and gradient checks under 60 s.
 *   3. Masking-policy statistics over 10^5 draws under 30 s.
 *   4. Pre-training sanity at the default scale: late-epoch losses halve
 *      the first-epoch losses, nothing diverges, under 10 min.
 *   5. Selection ground truth: the spectral task opens the DFT channel in
 *      >= 9/10 seeds, the burst task opens the DWT channel in >= 7/10.
 *   6. Information fusion: with a class-informative external channel the
 *      best mask using it is at least as good as the best mask without it,
 *      across 5 seeds.
 *   7. Frozen reuse: embedding two different labeled tasks leaves every
 *      checkpoint byte untouched and reports are repeatable.
 *   8. Shape contracts: d = 128 by default, embeddings are n*d long,
 *      enumerate_masks(n) yields 2^n - 1 entries for n in 1..6.
 */
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "compressor.hpp"
#include "mixer.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "selection.hpp"
#include "signal_methods.hpp"

using namespace sgsm;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

struct Check {
  std::vector<std::string> failures;

  void require(bool ok, const std::string& message) {
    if (!ok) failures.push_back(message);
  }
  template <typename A, typename B>
  void require_lt(A a, B b, const std::string& what) {
    if (!(a < b)) {
      failures.push_back(what + ": " + std::to_string(a) + " !< " +
                         std::to_string(b));
    }
  }
};

struct Fixtures {
  fs::path work;
  std::optional<PipelineConfig> default_config;
  std::optional<SgsmInstance> default_instance;
  std::optional<SynthResult> default_data;
};

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    out[entry.path().filename().string()] = file_bytes(entry.path());
  }
  return out;
}

std::vector<double> random_signal(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

// ---- criterion 1: DSP oracles -------------------------------------------

void criterion_dsp_oracles(Check& check, Fixtures&) {
  const auto start = clock_type::now();

  for (std::size_t length : {8u, 16u, 32u, 64u}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(derive_seed(seed, length));
      const auto x = random_signal(length, rng);
      const auto got = dft_magnitude(x);
      const auto expected = oracle::direct_dft_magnitude(x);
      check.require_lt(oracle::max_abs_diff(got, expected), 1e-6,
                       "dft magnitude vs direct summation, L=" +
                           std::to_string(length));
    }
  }

  Rng rng(11);
  for (std::size_t length : {8u, 64u, 256u}) {
    for (int trial = 0; trial < 25; ++trial) {
      const auto x = random_signal(length, rng);
      const auto coeffs = dwt_haar(x);
      check.require_lt(
          std::abs(oracle::energy(coeffs) - oracle::energy(x)), 1e-6,
          "haar energy preservation, L=" + std::to_string(length));
      check.require_lt(oracle::max_abs_diff(oracle::inverse_dwt_haar(coeffs), x),
                       1e-6, "haar inversion, L=" + std::to_string(length));
    }
  }

  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_signal(64, rng);
    const auto p = periodogram(x);
    const auto mag = dft_magnitude(x);
    for (std::size_t k = 0; k < p.size(); ++k) {
      check.require_lt(std::abs(p[k] - mag[k] * mag[k] / 64.0), 1e-9,
                       "periodogram vs |DFT|^2/L");
    }
  }

  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_signal(256, rng);
    if (trial % 2 == 0) {
      for (std::size_t t = 0; t < x.size(); ++t) {
        x[t] += 2.0 * std::sin(6.2831853 * 7.0 * static_cast<double>(t) / 256.0);
      }
    }
    const auto decomposition = emd(x);
    std::vector<double> sum = decomposition.residual;
    for (const auto& imf : decomposition.imfs) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += imf[i];
    }
    check.require_lt(oracle::max_abs_diff(sum, x), 1e-6, "emd completeness");
  }

  const double elapsed =
      std::chrono::duration<double>(clock_type::now() - start).count();
  check.require_lt(elapsed, 30.0, "criterion 1 runtime (s)");
}

// ---- criterion 2: loss and gradients -------------------------------------

void criterion_loss_gradients(Check& check, Fixtures&) {
  const auto start = clock_type::now();

  {
    const std::vector<float> y{1.0f, 2.0f, -1.0f};
    check.require_lt(std::abs(mse_cosine_loss(y, y).value), 1e-6,
                     "loss(y, y) == 0");
    const std::vector<float> a{-1.0f, 0.0f}, b{1.0f, 0.0f};
    check.require_lt(std::abs(mse_cosine_loss(a, b).value - 4.0), 1e-6,
                     "loss([-1,0],[1,0]) == 4");
    const std::vector<float> c{1.0f, 1.0f}, d{1.0f, 0.0f};
    check.require_lt(
        std::abs(mse_cosine_loss(c, d).value - 0.7928932188134524), 1e-6,
        "loss([1,1],[1,0]) == 0.79289...");
  }

  struct NetCase {
    const char* name;
    Network net;
    std::size_t in, out;
  };
  Rng rng(21);
  std::vector<NetCase> cases;
  cases.push_back({"dense-3",
                   Network({6}, {LayerSpec::linear(6, 10), LayerSpec::relu(),
                                 LayerSpec::linear(10, 4)}),
                   6, 4});
  cases.push_back({"conv-stack",
                   Network({1, 24}, {LayerSpec::conv1d(1, 4, 5, 2),
                                     LayerSpec::relu(),
                                     LayerSpec::linear(4 * 10, 6)}),
                   24, 6});
  cases.push_back({"deep-mixed",
                   Network({1, 16},
                           {LayerSpec::conv1d(1, 2, 3, 1), LayerSpec::relu(),
                            LayerSpec::linear(2 * 14, 12), LayerSpec::relu(),
                            LayerSpec::linear(12, 5)}),
                   16, 5});
  for (auto& c : cases) {
    c.net.init_params(rng);
    std::vector<float> input(c.in), target(c.out);
    for (auto& v : input) v = static_cast<float>(rng.normal());
    for (auto& v : target) v = static_cast<float>(rng.normal());
    check.require_lt(gradcheck(c.net, input, target), 1e-3,
                     std::string("gradcheck ") + c.name);
  }

  const double elapsed =
      std::chrono::duration<double>(clock_type::now() - start).count();
  check.require_lt(elapsed, 60.0, "criterion 2 runtime (s)");
}

// ---- criterion 3: masking statistics -------------------------------------

void criterion_masking_statistics(Check& check, Fixtures&) {
  const auto start = clock_type::now();
  const std::size_t n = 5, d = 128;
  Rng data_rng(31);
  ConcatCode v;
  v.channel_count = n;
  v.code_length = d;
  v.values.resize(n * d);
  for (auto& x : v.values) {
    x = static_cast<float>(data_rng.normal());
    if (x == 0.0f) x = 0.25f;
  }

  Rng rng(32);
  const int draws = 100000;
  int global = 0, channel_draws = 0;
  bool global_counts_exact = true;
  bool never_all_closed = true;
  std::vector<int> closed(n, 0);
  const auto expected_zeroed = static_cast<std::size_t>(
      std::llround(0.10 * static_cast<double>(n * d)));
  for (int i = 0; i < draws; ++i) {
    const auto draw = sample_training_mask(v, rng);
    if (draw.policy == MaskPolicy::kGlobal) {
      ++global;
      std::size_t zeroed = 0;
      for (float x : draw.masked) zeroed += x == 0.0f;
      if (zeroed != expected_zeroed) global_counts_exact = false;
    } else {
      ++channel_draws;
      if (draw.channels.open_count() == 0) never_all_closed = false;
      for (std::size_t c = 0; c < n; ++c) closed[c] += !draw.channels.open[c];
    }
  }

  const double global_freq = static_cast<double>(global) / draws;
  check.require(std::abs(global_freq - 0.80) <= 0.01,
                "global-policy frequency " + std::to_string(global_freq) +
                    " outside 0.80 +- 0.01");
  check.require(global_counts_exact,
                "a global draw zeroed a count other than round(0.10*n*d) = " +
                    std::to_string(expected_zeroed));
  check.require(never_all_closed, "a channel draw closed every channel");
  const double marginal = (0.5 - std::pow(0.5, static_cast<double>(n))) /
                          (1.0 - std::pow(0.5, static_cast<double>(n)));
  for (std::size_t c = 0; c < n; ++c) {
    const double freq = static_cast<double>(closed[c]) / channel_draws;
    check.require(std::abs(freq - marginal) <= 0.02,
                  "channel " + std::to_string(c) + " closed marginal " +
                      std::to_string(freq) + " outside " +
                      std::to_string(marginal) + " +- 0.02");
  }

  const double elapsed =
      std::chrono::duration<double>(clock_type::now() - start).count();
  check.require_lt(elapsed, 30.0, "criterion 3 runtime (s)");
}

// ---- criterion 4: pre-training sanity at the default scale ----------------

void criterion_pretraining(Check& check, Fixtures& fixtures) {
  const auto start = clock_type::now();

  PipelineConfig config = PipelineConfig::defaults();
  config.seed = 2026;
  const auto data = synth_dataset(config, config.seed);
  SgsmInstance instance = pretrain(config, data.unlabeled);

  for (std::size_t c = 0; c < instance.compressor_logs.size(); ++c) {
    const auto& loss = instance.compressor_logs[c].epoch_loss;
    const std::string id = config.methods[c].id();
    check.require(loss.size() == 50, "compressor " + id + " ran 50 epochs");
    bool finite = true;
    for (double l : loss) finite = finite && std::isfinite(l);
    check.require(finite, "compressor " + id + " losses all finite");
    if (loss.size() == 50) {
      check.require(loss[49] < 0.5 * loss[0],
                    "compressor " + id + " epoch-50 loss " +
                        std::to_string(loss[49]) + " !< 0.5 * epoch-1 loss " +
                        std::to_string(loss[0]));
    }
  }
  const auto& mixer_loss = instance.mixer_log.epoch_loss;
  check.require(mixer_loss.size() == 100, "mixer ran 100 epochs");
  bool finite = true;
  for (double l : mixer_loss) finite = finite && std::isfinite(l);
  check.require(finite, "mixer losses all finite");
  if (mixer_loss.size() == 100) {
    check.require(mixer_loss[99] < 0.5 * mixer_loss[0],
                  "mixer epoch-100 loss " + std::to_string(mixer_loss[99]) +
                      " !< 0.5 * epoch-1 loss " + std::to_string(mixer_loss[0]));
  }

  fixtures.default_config = config;
  fixtures.default_data = data;
  fixtures.default_instance = std::move(instance);

  const double elapsed =
      std::chrono::duration<double>(clock_type::now() - start).count();
  check.require_lt(elapsed, 600.0, "criterion 4 runtime (s)");
}

// ---- criterion 5: selection ground truth ----------------------------------

void criterion_selection_ground_truth(Check& check, Fixtures& fixtures) {
  // Spectral task: reuse the default instance (SpectralPeak, noise 0.3).
  check.require(fixtures.default_instance.has_value(),
                "criterion 4 fixture available");
  if (!fixtures.default_instance.has_value()) return;

  int dft_hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto result = run_selection(*fixtures.default_instance,
                                      fixtures.default_data->labeled, {}, seed);
    if (result.best_mask.open[0]) ++dft_hits;  // channel 0 is dft
  }
  check.require(dft_hits >= 9, "spectral task opened the DFT channel in " +
                                   std::to_string(dft_hits) + "/10 seeds");

  // Burst task: a reduced-scale instance keeps the sweep affordable.
  PipelineConfig config = PipelineConfig::from_json_text(R"({
    "schema": 1,
    "seed": 512,
    "input_length": 256,
    "code_length": 32,
    "methods": [{"kind": "dft"}, {"kind": "dwt"}, {"kind": "raw"},
                {"kind": "hht"}, {"kind": "periodogram"}],
    "compressor": {"epochs": 15, "batch_size": 64},
    "mixer": {"epochs": 30, "batch_size": 128},
    "synth": {"generator": "wavelet_burst", "class_count": 6,
              "samples_per_class": 80, "unlabeled_samples": 400,
              "noise_stddev": 0.3}
  })");
  const auto data = synth_dataset(config, config.seed);
  const auto instance = pretrain(config, data.unlabeled);
  int dwt_hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto result = run_selection(instance, data.labeled, {}, seed);
    if (result.best_mask.open[1]) ++dwt_hits;  // channel 1 is dwt
  }
  check.require(dwt_hits >= 7, "burst task opened the DWT channel in " +
                                   std::to_string(dwt_hits) + "/10 seeds");
}

// ---- criterion 6: information fusion with an external channel -------------

void criterion_information_fusion(Check& check, Fixtures&) {
  // Noisy spectral task the plain method bank struggles with, plus an
  // external channel that carries clean class information.
  const PipelineConfig base_config = PipelineConfig::from_json_text(R"({
    "schema": 1,
    "seed": 1024,
    "input_length": 256,
    "code_length": 32,
    "methods": [{"kind": "dft"}, {"kind": "dwt"}, {"kind": "raw"},
                {"kind": "hht"}, {"kind": "periodogram"},
                {"kind": "external", "name": "oracle_embedding",
                 "length": 256}],
    "compressor": {"epochs": 15, "batch_size": 64},
    "mixer": {"epochs": 30, "batch_size": 128},
    "synth": {"generator": "spectral_peak", "class_count": 6,
              "samples_per_class": 60, "unlabeled_samples": 400,
              "noise_stddev": 4.0}
  })");
  const std::size_t external_channel = 5;

  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    auto config = base_config;
    config.seed = seed;
    const auto data = synth_dataset(config, seed);
    const auto instance = pretrain(config, data.unlabeled);
    const auto result = run_selection(instance, data.labeled, {}, seed);

    double best_with = -1.0, best_without = -1.0;
    for (const auto& report : result.reports) {
      auto& side =
          report.mask.open[external_channel] ? best_with : best_without;
      side = std::max(side, report.phi_holdout);
    }
    check.require(best_with >= best_without,
                  "seed " + std::to_string(seed) + ": best with external " +
                      std::to_string(best_with) + " < best without " +
                      std::to_string(best_without));
  }
}

// ---- criterion 7: frozen-reuse contract -----------------------------------

void criterion_frozen_reuse(Check& check, Fixtures& fixtures) {
  check.require(fixtures.default_instance.has_value(),
                "criterion 4 fixture available");
  if (!fixtures.default_instance.has_value()) return;
  const auto& instance = *fixtures.default_instance;

  const fs::path ckpt_dir = fixtures.work / "frozen_checkpoints";
  fs::remove_all(ckpt_dir);
  save_instance(instance, ckpt_dir.string());
  const auto before = snapshot_dir(ckpt_dir);

  // two distinct labeled tasks through one pre-trained instance
  auto second_config = *fixtures.default_config;
  second_config.synth.generator = SynthConfig::Generator::kEnvelopeShape;
  second_config.synth.samples_per_class = 40;
  const auto task_b = synth_dataset(second_config, 777);

  const auto emb_a = embed_dataset(instance, fixtures.default_data->labeled,
                                   MaskConfig::all_open(5));
  const auto emb_b =
      embed_dataset(instance, task_b.labeled, MaskConfig::all_open(5));
  check.require(emb_a.dim(0) == fixtures.default_data->labeled.sample_count(),
                "task A embedding count");
  check.require(emb_b.dim(0) == task_b.labeled.sample_count(),
                "task B embedding count");

  const auto after = snapshot_dir(ckpt_dir);
  check.require(before == after,
                "checkpoints changed while embedding two labeled tasks");

  // repeatable reports under one seed
  const std::vector<MaskConfig> masks{MaskConfig::from_string("TTTTT"),
                                      MaskConfig::from_string("TFFFF"),
                                      MaskConfig::from_string("FFFTF")};
  const auto r1 =
      run_selection(instance, fixtures.default_data->labeled, masks, 99);
  const auto r2 =
      run_selection(instance, fixtures.default_data->labeled, masks, 99);
  check.require(report_to_json(r1) == report_to_json(r2),
                "repeated selection runs produced different reports");
}

// ---- criterion 8: shape contracts -----------------------------------------

void criterion_shape_contracts(Check& check, Fixtures& fixtures) {
  const auto defaults = PipelineConfig::defaults();
  check.require(defaults.code_length == 128, "default code length is 128");
  check.require(defaults.embedding_length() ==
                    defaults.channel_count() * defaults.code_length,
                "embedding length is n*d");

  for (std::size_t n = 1; n <= 6; ++n) {
    const auto masks = enumerate_masks(n);
    check.require(masks.size() == (std::size_t{1} << n) - 1,
                  "enumerate_masks(" + std::to_string(n) + ") yields 2^n-1");
  }
  check.require(enumerate_masks(6).size() == 63,
                "six-channel sweep has 63 masks");

  if (fixtures.default_instance.has_value()) {
    const auto& instance = *fixtures.default_instance;
    // one sample end to end: code length d, embedding length n*d
    const auto& labeled = fixtures.default_data->labeled;
    SignalSequence x;
    x.values.resize(instance.config.input_length);
    for (std::size_t k = 0; k < x.values.size(); ++k) {
      x.values[k] = labeled.signals.values[k];
    }
    const auto transformed = apply_method(instance.config.methods[0], x);
    const auto code = instance.compressors[0].encode(transformed);
    check.require(code.size() == 128, "encoded code has length 128");

    const auto emb = embed_dataset(instance, labeled, MaskConfig::all_open(5));
    check.require(emb.shape.back() == 640, "embedding length is 5 * 128");
  }
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Check&, Fixtures&)> run;
};

}  // namespace

int main() {
  Fixtures fixtures;
  fixtures.work = fs::temp_directory_path() / "sgsm_acceptance";
  fs::remove_all(fixtures.work);
  fs::create_directories(fixtures.work);

  const std::vector<Criterion> criteria{
      {1, "DSP oracles (DFT/DWT/periodogram/EMD)", criterion_dsp_oracles},
      {2, "loss values and gradient checks", criterion_loss_gradients},
      {3, "masking-policy statistics", criterion_masking_statistics},
      {4, "pre-training sanity at the default scale", criterion_pretraining},
      {5, "selection ground truth (DFT / DWT tasks)",
       criterion_selection_ground_truth},
      {6, "information fusion through an external channel",
       criterion_information_fusion},
      {7, "frozen-reuse contract", criterion_frozen_reuse},
      {8, "shape contracts", criterion_shape_contracts},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = clock_type::now();
    try {
      criterion.run(check, fixtures);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(clock_type::now() - start).count();
    if (check.failures.empty()) {
      std::printf("[PASS] criterion %d: %s (%.1f s)\n", criterion.id,
                  criterion.name, elapsed);
    } else {
      ++failed;
      std::printf("[FAIL] criterion %d: %s (%.1f s) -- %s\n", criterion.id,
                  criterion.name, elapsed, check.failures.front().c_str());
      for (std::size_t i = 1; i < check.failures.size() && i < 6; ++i) {
        std::printf("       also: %s\n", check.failures[i].c_str());
      }
    }
    std::fflush(stdout);
  }

  if (failed == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failed,
                criteria.size());
  }
  return failed == 0 ? 0 : 1;
}

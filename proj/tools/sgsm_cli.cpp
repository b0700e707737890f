/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 *
 * Command-line front end over the sgsm C API. Subcommands mirror the
 * pre-training and application workflow: synth, transform,
 * train-compressors, train-mixer, embed, select, report.
 *
 * Exit codes: 0 success, 2 config error, 3 data error, 4 training
 * divergence (non-finite loss).
 */
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sgsm/sgsm.h"

namespace {

int exit_code_for(sgsm_status status) {
  switch (status) {
    case SGSM_OK: return 0;
    case SGSM_ERROR_CONFIG: return 2;
    case SGSM_ERROR_DATA: return 3;
    case SGSM_ERROR_DIVERGED: return 4;
    case SGSM_ERROR_INVALID: return 2;
    case SGSM_ERROR_INTERNAL: return 3;
  }
  return 3;
}

int finish(sgsm_status status, const char* action) {
  if (status != SGSM_OK) {
    std::fprintf(stderr, "sgsm: %s failed (%s): %s\n", action,
                 sgsm_status_name(status), sgsm_last_error());
  }
  return exit_code_for(status);
}

struct PipelineGuard {
  sgsm_pipeline* handle = nullptr;
  ~PipelineGuard() { sgsm_pipeline_free(handle); }
};

/// Opens the config and resolves the effective seed (--seed wins over the
/// config file). Returns nonzero exit code on failure.
int open_pipeline(const std::string& config_path, bool seed_given,
                  std::uint64_t cli_seed, PipelineGuard& guard,
                  std::uint64_t& seed) {
  const sgsm_status status =
      sgsm_pipeline_open(config_path.c_str(), &guard.handle);
  if (status != SGSM_OK) return finish(status, "loading the config");
  seed = seed_given ? cli_seed : sgsm_pipeline_seed(guard.handle);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgsm: pre-trained signal-method embeddings with automatic "
               "method-subset selection"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--seed may follow the subcommand name
  app.set_version_flag("--version", sgsm_version());

  std::string config_path;
  std::uint64_t cli_seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "pipeline config JSON")
      ->required()
      ->envname("SGSM_CONFIG");
  auto* seed_opt = app.add_option("--seed", cli_seed,
                                  "override the config seed for this command");

  std::string data_dir, out_dir, out_path, ckpt_dir, split = "labeled";
  std::string mask, masks_csv, report_json, report_table, json_path;
  double epsilon = -1.0, varsigma = -1.0;

  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  synth->add_option("--out", out_dir, "output dataset directory")->required();

  auto* transform = app.add_subcommand(
      "transform", "apply every registered method to a dataset split");
  transform->add_option("--data", data_dir, "dataset directory")->required();
  transform->add_option("--split", split, "labeled|unlabeled");
  transform->add_option("--out", out_dir, "output directory")->required();

  auto* train_cmp = app.add_subcommand(
      "train-compressors", "train one compressor per method channel");
  train_cmp->add_option("--data", data_dir, "dataset directory")->required();
  train_cmp->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();

  auto* train_mix = app.add_subcommand(
      "train-mixer", "train the mixer on the concatenated code dataset");
  train_mix->add_option("--data", data_dir, "dataset directory")->required();
  train_mix->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();

  auto* embed = app.add_subcommand(
      "embed", "embed a dataset split under a channel mask");
  embed->add_option("--data", data_dir, "dataset directory")->required();
  embed->add_option("--split", split, "labeled|unlabeled");
  embed->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  embed->add_option("--mask", mask, "channel mask such as TTFTF")->required();
  embed->add_option("--out", out_path, "output SGTF path")->required();

  auto* select = app.add_subcommand(
      "select", "sweep channel masks on the labeled split and pick the best");
  select->add_option("--data", data_dir, "dataset directory")->required();
  select->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  select->add_option("--masks", masks_csv,
                     "comma-separated masks (default: all 2^n-1)");
  select->add_option("--out-json", report_json, "report JSON path")->required();
  select->add_option("--out-table", report_table, "report table path");
  select->add_option("--epsilon", epsilon,
                     "fail when the selection margin is below this");
  select->add_option("--varsigma", varsigma,
                     "fail when the train/holdout gap exceeds this");

  auto* report = app.add_subcommand(
      "report", "render the text table of an existing report");
  report->add_option("--json", json_path, "report JSON path")->required();
  report->add_option("--out-table", report_table,
                     "write the table here instead of stdout");
  report->add_option("--epsilon", epsilon, "margin gate");
  report->add_option("--varsigma", varsigma, "gap gate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  seed_given = seed_opt->count() > 0;

  PipelineGuard pipeline;
  std::uint64_t seed = 0;
  if (const int rc =
          open_pipeline(config_path, seed_given, cli_seed, pipeline, seed)) {
    return rc;
  }

  if (synth->parsed()) {
    return finish(sgsm_synth(pipeline.handle, out_dir.c_str(), seed), "synth");
  }
  if (transform->parsed()) {
    return finish(sgsm_transform(pipeline.handle, data_dir.c_str(),
                                 split.c_str(), out_dir.c_str()),
                  "transform");
  }
  if (train_cmp->parsed()) {
    return finish(sgsm_train_compressors(pipeline.handle, data_dir.c_str(),
                                         ckpt_dir.c_str(), seed),
                  "train-compressors");
  }
  if (train_mix->parsed()) {
    return finish(sgsm_train_mixer(pipeline.handle, data_dir.c_str(),
                                   ckpt_dir.c_str(), seed),
                  "train-mixer");
  }
  if (embed->parsed()) {
    sgsm_status status = sgsm_load_checkpoints(pipeline.handle, ckpt_dir.c_str());
    if (status == SGSM_OK) {
      status = sgsm_embed(pipeline.handle, data_dir.c_str(), split.c_str(),
                          mask.c_str(), out_path.c_str());
    }
    return finish(status, "embed");
  }
  if (select->parsed()) {
    sgsm_status status = sgsm_load_checkpoints(pipeline.handle, ckpt_dir.c_str());
    if (status == SGSM_OK) {
      status = sgsm_select(pipeline.handle, data_dir.c_str(),
                           masks_csv.empty() ? nullptr : masks_csv.c_str(),
                           seed, report_json.c_str(),
                           report_table.empty() ? nullptr : report_table.c_str(),
                           epsilon, varsigma);
    }
    return finish(status, "select");
  }
  if (report->parsed()) {
    char* table = nullptr;
    sgsm_status status = sgsm_report_render(json_path.c_str(), &table);
    if (status == SGSM_OK) {
      if (report_table.empty()) {
        std::fputs(table, stdout);
      } else {
        std::FILE* f = std::fopen(report_table.c_str(), "w");
        if (f == nullptr) {
          sgsm_string_free(table);
          std::fprintf(stderr, "sgsm: cannot create %s\n", report_table.c_str());
          return 3;
        }
        std::fputs(table, f);
        std::fclose(f);
      }
      sgsm_string_free(table);
      status = sgsm_report_check_gates(json_path.c_str(), epsilon, varsigma);
    }
    return finish(status, "report");
  }
  return 2;
}

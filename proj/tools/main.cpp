// Copyright 2026 The leofuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "leo/dataset.hpp"
#include "leo/evaluation.hpp"
#include "leo/fnv.hpp"
#include "leo/parallel.hpp"
#include "leo/training.hpp"
#include "leo/version.hpp"

namespace {

using json = nlohmann::json;

// exit codes: 0 ok, 2 usage/config, 3 data/schema, 4 numerical
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void reject_unknown_keys(const json & j, const std::set<std::string> & allowed, const std::string & where) {
  if (!j.is_object()) throw leo::InvalidConfig(where + " must be a JSON object");
  for (const auto & [key, value] : j.items()) {
    if (!allowed.count(key)) throw leo::InvalidConfig("unknown key '" + key + "' in " + where);
  }
}

json load_config(const std::string & path) {
  try {
    return json::parse(leo::io::read_file(path));
  } catch (const json::exception & e) {
    throw leo::InvalidConfig("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_manifest(const std::string & out_path, const std::string & command, const json & effective_config,
                    const json & input_hashes) {
  json m;
  m["tool"] = "leofuse";
  m["version"] = leo::kVersion;
  m["schemas"] = {{"dataset", leo::kDatasetSchemaVersion},
                  {"checkpoint", leo::kCheckpointSchemaVersion},
                  {"report", leo::kReportSchemaVersion}};
  m["command"] = command;
  m["config"] = effective_config;
  m["config_hash"] = leo::fnv1a_hex(effective_config.dump());
  m["inputs"] = input_hashes;
  m["output"] = {{"path", out_path}, {"hash", leo::fnv1a_hex(leo::io::read_file(out_path))}};
  leo::io::write_file(out_path + ".manifest.json", m.dump(2) + "\n");
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out_path;
};

json scenario_group_defaults() {
  return json{{"kind", "HIGHWAY_FOLLOW"}, {"count", 1},
              {"duration", 4.0},          {"target_length", 4.5},
              {"target_width", 1.8},      {"sensor_dropout_prob", 0.0},
              {"noise_scale", 1.0}};
}

int run_simulate(const SimulateArgs & args) {
  json cfg = load_config(args.config_path);
  reject_unknown_keys(cfg, {"seed", "scenarios"}, "simulate config");
  uint64_t seed = cfg.value("seed", 0ULL);
  if (!cfg.contains("scenarios") || !cfg["scenarios"].is_array() || cfg["scenarios"].empty()) {
    throw leo::InvalidConfig("simulate config needs a non-empty 'scenarios' array");
  }

  json effective;
  effective["seed"] = seed;
  effective["scenarios"] = json::array();
  std::vector<leo::sim::ScenarioConfig> scenarios;
  int scenario_id = 0;
  for (const auto & group : cfg["scenarios"]) {
    reject_unknown_keys(group,
                        {"kind", "count", "duration", "target_length", "target_width",
                         "sensor_dropout_prob", "noise_scale"},
                        "scenario group");
    json eff = scenario_group_defaults();
    eff.merge_patch(group);
    effective["scenarios"].push_back(eff);
    int count = eff["count"].get<int>();
    if (count <= 0) throw leo::InvalidConfig("scenario count must be positive");
    for (int i = 0; i < count; ++i) {
      leo::sim::ScenarioConfig sc;
      sc.kind = leo::sim::scenario_kind_from_name(eff["kind"].get<std::string>());
      sc.duration = eff["duration"].get<double>();
      sc.target_length = eff["target_length"].get<double>();
      sc.target_width = eff["target_width"].get<double>();
      sc.sensor_dropout_prob = eff["sensor_dropout_prob"].get<double>();
      sc.noise_scale = eff["noise_scale"].get<double>();
      sc.seed = leo::hash_counter(seed, 0x5c0fe, static_cast<uint64_t>(scenario_id), 0, 0);
      sc.scenario_id = scenario_id++;
      sc.validate();
      scenarios.push_back(sc);
    }
  }

  std::vector<std::vector<leo::sim::Frame>> per_scenario(scenarios.size());
  leo::parallel_for(scenarios.size(),
                    [&](size_t i) { per_scenario[i] = leo::sim::generate_scenario(scenarios[i]); });
  std::vector<leo::sim::Frame> frames;
  for (auto & fs : per_scenario) {
    frames.insert(frames.end(), std::make_move_iterator(fs.begin()), std::make_move_iterator(fs.end()));
  }
  leo::io::write_dataset(frames, args.out_path);
  write_manifest(args.out_path, "simulate", effective, json::object());
  std::cout << "wrote " << frames.size() << " frames from " << scenarios.size() << " scenarios to "
            << args.out_path << "\n";
  return 0;
}

// --- label -------------------------------------------------------------------

struct LabelArgs {
  std::string data_path;
  std::string out_path;
};

int run_label(const LabelArgs & args) {
  auto frames = leo::io::read_dataset(args.data_path);
  size_t labeled = 0;
  for (auto & f : frames) {
    if (f.tracks.empty()) continue;
    try {
      f.fused = leo::fusion::fuse_tracks(f.tracks);
      ++labeled;
    } catch (const leo::Error &) {
      // frames the geometric pipeline cannot label are left bare
    }
  }
  leo::io::write_dataset(frames, args.out_path);
  json effective{{"data", args.data_path}};
  write_manifest(args.out_path, "label", effective,
                 json{{"data", leo::fnv1a_hex(leo::io::read_file(args.data_path))}});
  std::cout << "labeled " << labeled << " of " << frames.size() << " frames into " << args.out_path << "\n";
  return 0;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data_path;
  std::string config_path;
  std::string out_path;
};

json train_config_defaults() {
  json j;
  j["labels"] = "truth";
  j["model"] = leo::gat::gat_config_to_json(leo::gat::GatConfig{});
  leo::train::LossConfig lc;
  j["loss"] = {{"beta", std::vector<double>(lc.beta.begin(), lc.beta.end())},
               {"smooth_l1_beta", lc.smooth_l1_beta},
               {"alpha", lc.alpha},
               {"lambda_iou", lc.lambda_iou}};
  leo::train::OptimConfig oc;
  j["optim"] = {{"lr0", oc.lr0},
                {"plateau_factor", oc.plateau_factor},
                {"plateau_patience", oc.plateau_patience},
                {"clip_norm", oc.clip_norm},
                {"batch", oc.batch},
                {"max_epochs", oc.max_epochs},
                {"early_stop_patience", oc.early_stop_patience},
                {"seed", oc.seed},
                {"val_scenario_fraction", oc.val_scenario_fraction}};
  return j;
}

int run_train(const TrainArgs & args) {
  json cfg = args.config_path.empty() ? json::object() : load_config(args.config_path);
  reject_unknown_keys(cfg, {"labels", "model", "loss", "optim"}, "train config");
  if (cfg.contains("model")) {
    reject_unknown_keys(cfg["model"],
                        {"hidden", "heads", "layers", "dropout", "leaky_slope", "max_pool", "init_seed"},
                        "train config 'model'");
  }
  if (cfg.contains("loss")) {
    reject_unknown_keys(cfg["loss"], {"beta", "smooth_l1_beta", "alpha", "lambda_iou"}, "train config 'loss'");
  }
  if (cfg.contains("optim")) {
    reject_unknown_keys(cfg["optim"],
                        {"lr0", "plateau_factor", "plateau_patience", "clip_norm", "batch", "max_epochs",
                         "early_stop_patience", "seed", "val_scenario_fraction"},
                        "train config 'optim'");
  }
  json effective = train_config_defaults();
  effective.merge_patch(cfg);

  std::string labels = effective["labels"].get<std::string>();
  if (labels != "truth" && labels != "fused") {
    throw leo::InvalidConfig("'labels' must be 'truth' or 'fused'");
  }
  leo::gat::GatConfig model_cfg = leo::gat::gat_config_from_json(effective["model"]);
  leo::train::LossConfig loss_cfg;
  {
    const json & l = effective["loss"];
    auto beta = l["beta"].get<std::vector<double>>();
    if (beta.size() != 8) throw leo::InvalidConfig("loss.beta must have 8 entries");
    std::copy(beta.begin(), beta.end(), loss_cfg.beta.begin());
    loss_cfg.smooth_l1_beta = l["smooth_l1_beta"].get<double>();
    loss_cfg.alpha = l["alpha"].get<double>();
    loss_cfg.lambda_iou = l["lambda_iou"].get<double>();
  }
  leo::train::OptimConfig optim_cfg;
  {
    const json & o = effective["optim"];
    optim_cfg.lr0 = o["lr0"].get<double>();
    optim_cfg.plateau_factor = o["plateau_factor"].get<double>();
    optim_cfg.plateau_patience = o["plateau_patience"].get<int>();
    optim_cfg.clip_norm = o["clip_norm"].get<double>();
    optim_cfg.batch = o["batch"].get<int>();
    optim_cfg.max_epochs = o["max_epochs"].get<int>();
    optim_cfg.early_stop_patience = o["early_stop_patience"].get<int>();
    optim_cfg.seed = o["seed"].get<uint64_t>();
    optim_cfg.val_scenario_fraction = o["val_scenario_fraction"].get<double>();
  }

  auto frames = leo::io::read_dataset(args.data_path);
  auto source = labels == "fused" ? leo::graph::LabelSource::FUSED : leo::graph::LabelSource::TRUTH;

  std::ofstream metrics(args.out_path + ".metrics.jsonl");
  auto t0 = std::chrono::steady_clock::now();
  leo::train::TrainResult result =
      leo::train::train(frames, source, model_cfg, loss_cfg, optim_cfg, &metrics);
  auto t1 = std::chrono::steady_clock::now();

  result.checkpoint.config_echo = effective;
  leo::gat::save_checkpoint(result.checkpoint, args.out_path);
  write_manifest(args.out_path, "train", effective,
                 json{{"data", leo::fnv1a_hex(leo::io::read_file(args.data_path))}});
  std::cout << "trained " << result.checkpoint.params.total_size() << " parameters for "
            << (result.stopped_epoch + 1) << " epochs in "
            << std::chrono::duration<double>(t1 - t0).count() << " s; best val loss "
            << result.best_val_loss << ", train GIoU " << result.final_train_giou << "\n";
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string ckpt_path;
  std::string data_path;
  std::string out_path;
  std::vector<std::string> drop_sensors;
  bool no_inter_attention = false;
  bool no_latency = false;
};

int run_eval(const EvalArgs & args) {
  leo::gat::Checkpoint ckpt = leo::gat::load_checkpoint(args.ckpt_path);
  auto frames = leo::io::read_dataset(args.data_path);
  leo::eval::EvalOptions opt;
  for (const auto & name : args.drop_sensors) opt.drop_sensors.insert(leo::fusion::sensor_from_name(name));
  opt.no_inter_attention = args.no_inter_attention;
  opt.measure_latency = !args.no_latency;
  json report = leo::eval::evaluate(ckpt, frames, opt);
  leo::io::write_file(args.out_path, report.dump(2) + "\n");
  std::string stem = args.out_path;
  if (stem.size() > 5 && stem.ends_with(".json")) stem = stem.substr(0, stem.size() - 5);
  leo::eval::write_report_csv(report, stem + ".csv");
  leo::eval::write_report_svg(report, stem + ".svg");

  json effective{{"ckpt", args.ckpt_path},
                 {"data", args.data_path},
                 {"drop_sensors", args.drop_sensors},
                 {"no_inter_attention", args.no_inter_attention},
                 {"no_latency", args.no_latency}};
  write_manifest(args.out_path, "eval", effective,
                 json{{"data", leo::fnv1a_hex(leo::io::read_file(args.data_path))},
                      {"ckpt", leo::fnv1a_hex(leo::io::read_file(args.ckpt_path))}});
  if (!report["global"].is_null()) {
    std::cout << "evaluated " << report["counts"]["evaluated"] << " windows; global GIoU "
              << report["global"]["giou"] << "\n";
  }
  return 0;
}

// --- bench -------------------------------------------------------------------

int run_bench(const std::string & ckpt_path) {
  leo::sim::ScenarioConfig sc;
  sc.kind = leo::sim::ScenarioKind::HIGHWAY_FOLLOW;
  sc.duration = 2.0;
  sc.seed = 1;
  auto frames = leo::sim::generate_scenario(sc);
  auto windows = leo::graph::build_windows(frames, leo::graph::LabelSource::TRUTH);

  leo::gat::Checkpoint ckpt;
  if (!ckpt_path.empty()) {
    ckpt = leo::gat::load_checkpoint(ckpt_path);
  } else {
    ckpt.model = leo::gat::GatConfig{};
    ckpt.params = leo::gat::init_params(ckpt.model);
    std::vector<leo::graph::FusionGraph> copy(windows.begin(), windows.end());
    ckpt.stats = leo::graph::compute_feature_stats(copy);
  }
  std::vector<leo::graph::FusionGraph> prepared;
  for (const auto & w : windows) prepared.push_back(leo::graph::normalize_features(w, ckpt.stats));

  std::vector<double> lat;
  for (int i = 0; i < 60; ++i) {
    const auto & g = prepared[static_cast<size_t>(i) % prepared.size()];
    auto t0 = std::chrono::steady_clock::now();
    (void)leo::gat::predict(ckpt.params, ckpt.model, g);
    auto t1 = std::chrono::steady_clock::now();
    lat.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  lat.erase(lat.begin(), lat.begin() + 10);
  double mean = 0.0;
  for (double v : lat) mean += v;
  mean /= static_cast<double>(lat.size());
  std::sort(lat.begin(), lat.end());
  double p95 = lat[static_cast<size_t>(0.95 * static_cast<double>(lat.size() - 1))];

  std::vector<const leo::graph::FusionGraph *> batch;
  for (int i = 0; i < 128; ++i) batch.push_back(&prepared[static_cast<size_t>(i) % prepared.size()]);
  auto t0 = std::chrono::steady_clock::now();
  leo::nn::Tape tape;
  auto bound = leo::gat::bind(tape, ckpt.params, false);
  (void)leo::gat::forward_batch(tape, bound, ckpt.model, batch, {});
  auto t1 = std::chrono::steady_clock::now();
  double batch_s = std::chrono::duration<double>(t1 - t0).count();

  std::cout << "single-graph forward: mean " << mean << " ms, p95 " << p95 << " ms\n";
  std::cout << "batch-128 forward: " << batch_s * 1000.0 << " ms (" << (128.0 / batch_s)
            << " graphs/s)\n";
  return 0;
}

int dispatch_errors(const std::function<int()> & fn) {
  try {
    return fn();
  } catch (const leo::InvalidConfig & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const leo::IoError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const leo::SchemaMismatch & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const leo::HashMismatch & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const leo::EmptyDataset & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const leo::Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char ** argv) {
  CLI::App app{"multi-sensor extended-object shape fusion toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto * sim_cmd = app.add_subcommand("simulate", "generate a synthetic multi-sensor track dataset");
  sim_cmd->add_option("--config", sim_args.config_path, "scenario config JSON")->required();
  sim_cmd->add_option("--out", sim_args.out_path, "output dataset JSONL")->required();

  LabelArgs label_args;
  auto * label_cmd = app.add_subcommand("label", "fuse tracks into geometric auto-labels");
  label_cmd->add_option("--data", label_args.data_path, "input dataset JSONL")->required();
  label_cmd->add_option("--out", label_args.out_path, "output dataset JSONL")->required();

  TrainArgs train_args;
  auto * train_cmd = app.add_subcommand("train", "train the attention fusion model");
  train_cmd->add_option("--data", train_args.data_path, "training dataset JSONL")->required();
  train_cmd->add_option("--config", train_args.config_path, "training config JSON");
  train_cmd->add_option("--out", train_args.out_path, "output checkpoint path")->required();

  EvalArgs eval_args;
  auto * eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against ground truth");
  eval_cmd->add_option("--ckpt", eval_args.ckpt_path, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_args.data_path, "dataset JSONL")->required();
  eval_cmd->add_option("--out", eval_args.out_path, "report JSON path")->required();
  eval_cmd->add_option("--drop-sensor", eval_args.drop_sensors, "sensors to blank (ablation)")
      ->delimiter(',');
  eval_cmd->add_flag("--no-inter-attention", eval_args.no_inter_attention,
                     "force lambda=1 (temporal branch only)");
  eval_cmd->add_flag("--no-latency", eval_args.no_latency,
                     "skip wall-clock latency probes (byte-reproducible reports)");

  std::string bench_ckpt;
  auto * bench_cmd = app.add_subcommand("bench", "quick forward-latency benchmark");
  bench_cmd->add_option("--ckpt", bench_ckpt, "optional checkpoint (random init otherwise)");

  auto * version_cmd = app.add_subcommand("version", "print tool and schema versions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitUsage;
  }

  if (version_cmd->parsed()) {
    std::cout << "leofuse " << leo::kVersion << " (dataset schema " << leo::kDatasetSchemaVersion
              << ", checkpoint schema " << leo::kCheckpointSchemaVersion << ", report schema "
              << leo::kReportSchemaVersion << ")\n";
    return 0;
  }
  if (sim_cmd->parsed()) return dispatch_errors([&] { return run_simulate(sim_args); });
  if (label_cmd->parsed()) return dispatch_errors([&] { return run_label(label_args); });
  if (train_cmd->parsed()) return dispatch_errors([&] { return run_train(train_args); });
  if (eval_cmd->parsed()) return dispatch_errors([&] { return run_eval(eval_args); });
  if (bench_cmd->parsed()) return dispatch_errors([&] { return run_bench(bench_ckpt); });
  return kExitUsage;
}

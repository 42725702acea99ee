// Copyright 2026 The hybridpred Authors
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

#include "hybridpred/encoder.hpp"
#include "hybridpred/errors.hpp"
#include "hybridpred/key_positions.hpp"
#include "hybridpred/metrics.hpp"
#include "hybridpred/pipeline.hpp"
#include "hybridpred/plot.hpp"
#include "hybridpred/ppo.hpp"
#include "hybridpred/scene_io.hpp"
#include "hybridpred/subscene.hpp"
#include "hybridpred/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hybridpred;  // NOLINT

namespace
{

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

/// Parameter sets a command may read from --config; flags override them.
struct Settings
{
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  EncoderTrainConfig encoder_train;
  PolicyConfig policy;
  PPOConfig ppo;
  EnvConfig env;
  std::size_t updates = 200;
};

Settings load_settings(const std::string & path)
{
  Settings s;
  if (path.empty()) {
    return s;
  }
  const json j = parse_json_file(path);
  if (!j.is_object()) {
    throw ValidationError("config file must hold an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string & key = it.key();
    const json & v = it.value();
    if (key == "seed") {
      if (!v.is_number_unsigned()) {
        throw ValidationError("config field 'seed' must be a non-negative integer");
      }
      s.seed = v.get<std::uint64_t>();
    } else if (key == "encoder") {
      s.encoder = EncoderConfig::from_json(v, s.encoder);
    } else if (key == "encoder_train") {
      s.encoder_train = EncoderTrainConfig::from_json(v, s.encoder_train);
    } else if (key == "policy") {
      s.policy = PolicyConfig::from_json(v, s.policy);
    } else if (key == "ppo") {
      s.ppo = PPOConfig::from_json(v, s.ppo);
    } else if (key == "env") {
      s.env = EnvConfig::from_json(v, s.env);
    } else if (key == "updates") {
      if (!v.is_number_unsigned()) {
        throw ValidationError("config field 'updates' must be a non-negative integer");
      }
      s.updates = v.get<std::size_t>();
    } else {
      throw ValidationError("unknown config section '" + key + "'");
    }
  }
  return s;
}

std::vector<fs::path> scene_files(const fs::path & dir)
{
  if (!fs::is_directory(dir)) {
    throw ValidationError("scene directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto & e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ValidationError("no scene files in " + dir.string());
  }
  return files;
}

std::string csv_comment(const json & run_config) { return "# run_config: " + run_config.dump() + "\n"; }

/// Splits "transformer-kinematic" style arm names into architecture and motion model.
void apply_rl_arm(const std::string & arm, Settings & s)
{
  const auto dash = arm.find('-');
  if (dash == std::string::npos) {
    throw ValidationError("rl ablation must be <transformer|vanilla>-<kinematic|direct>: " + arm);
  }
  s.policy.arch = policy_arch_from_string(arm.substr(0, dash));
  const std::string motion = arm.substr(dash + 1);
  if (motion == "kinematic") {
    s.env.kinematic = true;
  } else if (motion == "direct") {
    s.env.kinematic = false;
  } else {
    throw ValidationError("unknown motion model '" + motion + "'");
  }
}

json base_run_config(const std::string & command, const Settings & s)
{
  return {{"command", command}, {"seed", s.seed}};
}

// gen

struct GenArgs
{
  std::string kind = "straight";
  std::size_t count = 1;
  std::size_t agents = 3;
};

void cmd_gen(const GenArgs & a, const Settings & s, const fs::path & out)
{
  const bool mixed = a.kind == "mixed";
  const bool goal = a.kind == "goal";
  if (!mixed && !goal) {
    scene_kind_from_string(a.kind);
  }
  json rc = base_run_config("gen", s);
  rc["kind"] = a.kind;
  rc["count"] = a.count;
  rc["agents"] = a.agents;

  std::mt19937_64 rng(s.seed);
  const SceneKind kinds[] = {SceneKind::straight, SceneKind::curve, SceneKind::merge, SceneKind::intersection};
  for (std::size_t i = 0; i < a.count; ++i) {
    const std::uint64_t scene_seed = rng();
    Scene scene;
    std::string kind = a.kind;
    if (goal) {
      scene = straight_goal_task(scene_seed);
    } else {
      const SceneKind k = mixed ? kinds[i % 4] : scene_kind_from_string(a.kind);
      kind = to_string(k);
      scene = generate_synthetic_scene(k, a.agents, scene_seed);
    }
    json scene_rc = rc;
    scene_rc["index"] = i;
    scene_rc["scene_seed"] = scene_seed;
    scene_rc["scene_kind"] = kind;
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04zu.json", i);
    save_scene(scene, out / name, {{"run_config", scene_rc}});
  }
}

// train-encoder

void cmd_train_encoder(const fs::path & scenes_dir, const Settings & s, const fs::path & out)
{
  json rc = base_run_config("train-encoder", s);
  rc["scenes"] = scenes_dir.string();
  rc["encoder"] = s.encoder.to_json();
  rc["encoder_train"] = s.encoder_train.to_json();

  std::vector<EncoderInputs> data;
  for (const auto & f : scene_files(scenes_dir)) {
    data.push_back(prepare_encoder_inputs(load_scene(f), s.encoder));
  }
  HeteroEncoder encoder(s.encoder, s.seed);
  EncoderTrainConfig tc = s.encoder_train;
  tc.seed = s.seed;

  std::ostringstream log;
  log << csv_comment(rc) << "epoch,loss,regression,classification,min_fde\n";
  log.precision(10);
  train_encoder(encoder, data, tc, [&](const EncoderEpochLog & e) {
    log << e.epoch << ',' << e.loss << ',' << e.regression << ',' << e.classification << ',' << e.min_fde
        << '\n';
  });
  write_file_atomic(out / "encoder.json", dump_json(encoder.checkpoint(rc)));
  write_file_atomic(out / "encoder_loss.csv", log.str());
}

// train-rl

void cmd_train_rl(const fs::path & scenes_dir, const Settings & s, const fs::path & out)
{
  json rc = base_run_config("train-rl", s);
  rc["scenes"] = scenes_dir.string();
  rc["key_timestamps"] = s.encoder.key_timestamps;
  rc["policy"] = s.policy.to_json();
  rc["ppo"] = s.ppo.to_json();
  rc["env"] = s.env.to_json();
  rc["updates"] = s.updates;

  // Ground-truth key positions define the goals; each scene contributes its sub-scenes.
  std::vector<std::shared_ptr<const SubScene>> pool;
  for (const auto & f : scene_files(scenes_dir)) {
    auto scene = std::make_shared<const Scene>(load_scene(f));
    const KeyPositionSet kps =
      calibrate_key_positions(ground_truth_key_positions(*scene, s.encoder.key_timestamps), *scene);
    for (auto & sub : divide_subscenes(scene, kps, 0, s.env)) {
      pool.push_back(std::make_shared<const SubScene>(std::move(sub)));
    }
  }
  const SubSceneFactory factory = [&pool](std::mt19937_64 & rng) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };

  PolicyNet net(s.policy, s.seed);
  std::ostringstream log;
  log << csv_comment(rc);
  write_train_log_header(log);
  train_ppo(net, factory, s.env, s.ppo, s.updates, s.seed, [&](const TrainLogRow & row) {
    write_train_log_row(log, row);
  });
  write_file_atomic(out / "policy.json", dump_json(net.checkpoint({{"run_config", rc}})));
  write_file_atomic(out / "train_log.csv", log.str());
}

// predict

struct PredictArgs
{
  std::string scene;
  std::string encoder;
  std::string policy;
  std::string key_positions;
};

void cmd_predict(const PredictArgs & a, const Settings & s, const fs::path & out)
{
  if (a.encoder.empty() == a.key_positions.empty()) {
    throw ValidationError("predict needs exactly one of --encoder or --key-positions");
  }
  json rc = base_run_config("predict", s);
  rc["scene"] = a.scene;
  rc["policy"] = a.policy;

  auto scene = std::make_shared<const Scene>(load_scene(a.scene));
  const json policy_ckpt = parse_json_file(a.policy);
  const PolicyNet policy = PolicyNet::from_checkpoint(policy_ckpt);
  EnvConfig env = s.env;
  if (policy_ckpt.contains("run_config") && policy_ckpt["run_config"].contains("env")) {
    env = EnvConfig::from_json(policy_ckpt["run_config"]["env"], EnvConfig());
  }
  rc["env"] = env.to_json();
  rc["policy_config"] = policy.config().to_json();

  KeyPositionSet raw;
  if (!a.encoder.empty()) {
    const HeteroEncoder encoder = HeteroEncoder::from_checkpoint(parse_json_file(a.encoder));
    rc["encoder"] = a.encoder;
    rc["encoder_config"] = encoder.config().to_json();
    raw = encoder.predict(*scene);
  } else {
    rc["key_positions"] = a.key_positions;
    raw = key_positions_from_json(parse_json_file(a.key_positions));
    raw.validate();
  }

  std::ostringstream trace;
  trace << csv_comment(rc);
  write_trace_header(trace);
  const PipelineResult result = plan_from_key_positions(scene, raw, policy, env, &trace);

  const auto with_rc = [&rc](json j) {
    j["run_config"] = rc;
    return j;
  };
  write_file_atomic(
    out / "key_positions_raw.json", dump_json(with_rc(key_positions_to_json(result.raw_key_positions))));
  write_file_atomic(
    out / "key_positions_calibrated.json",
    dump_json(with_rc(key_positions_to_json(result.calibrated_key_positions))));
  write_file_atomic(
    out / "subscenes.json", dump_json(with_rc({{"modes", subscene_membership_json(result)}})));
  write_file_atomic(out / "trace.csv", trace.str());
  write_file_atomic(out / "predictions.json", dump_json(with_rc(predictions_to_json(result.predictions))));
}

// eval

void cmd_eval(
  const std::vector<std::string> & predictions, const std::vector<std::string> & scenes, const Settings & s,
  const fs::path & out)
{
  if (predictions.size() != scenes.size()) {
    throw ValidationError("eval needs one --scene per --predictions file");
  }
  json rc = base_run_config("eval", s);
  rc["predictions"] = predictions;
  rc["scenes"] = scenes;

  std::vector<AgentMetrics> all;
  json per_file = json::array();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Scene scene = load_scene(scenes[i]);
    const PredictionSet set = predictions_from_json(parse_json_file(predictions[i]));
    set.validate();
    const auto per_agent = agent_metrics_parallel(set, scene);
    per_file.push_back({{"predictions", predictions[i]}, {"metrics", summarize(per_agent).to_json()}});
    all.insert(all.end(), per_agent.begin(), per_agent.end());
  }
  const MetricsReport report = summarize(all);
  const json j = {{"run_config", rc}, {"metrics", report.to_json()}, {"per_file", per_file}};
  write_file_atomic(out / "metrics.json", dump_json(j));
  std::cout << report.to_json().dump() << '\n';
}

// plot

struct PlotArgs
{
  std::string scene;
  std::string predictions;
  std::string key_positions;
  std::string trace;
};

void cmd_plot(const PlotArgs & a, const Settings & s, const fs::path & out)
{
  json rc = base_run_config("plot", s);
  rc["scene"] = a.scene;
  const Scene scene = load_scene(a.scene);
  std::optional<PredictionSet> preds;
  std::optional<KeyPositionSet> kps;
  std::optional<std::map<std::string, Trajectory>> traces;
  if (!a.predictions.empty()) {
    rc["predictions"] = a.predictions;
    preds = predictions_from_json(parse_json_file(a.predictions));
    preds->validate();
  }
  if (!a.key_positions.empty()) {
    rc["key_positions"] = a.key_positions;
    kps = key_positions_from_json(parse_json_file(a.key_positions));
    kps->validate();
  }
  if (!a.trace.empty()) {
    rc["trace"] = a.trace;
    std::ifstream in(a.trace);
    if (!in) {
      throw ValidationError("cannot open " + a.trace);
    }
    traces = read_trace_csv(in);
  }
  PlotLayers layers;
  layers.predictions = preds ? &*preds : nullptr;
  layers.key_positions = kps ? &*kps : nullptr;
  layers.traces = traces ? &*traces : nullptr;
  layers.metadata = "run_config: " + rc.dump();
  write_file_atomic(out / "plot.svg", render_svg(scene, layers));
}

int fail(int code, const char * kind, const std::string & message)
{
  std::cerr << "error " << json{{"code", code}, {"kind", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Hybrid key-position and RL trajectory prediction"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  const auto common = [&](CLI::App * sub) {
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->required();
  };

  GenArgs gen;
  auto * gen_cmd = app.add_subcommand("gen", "Generate synthetic scenes");
  common(gen_cmd);
  gen_cmd->add_option("--kind", gen.kind, "straight|curve|merge|intersection|mixed|goal");
  gen_cmd->add_option("--count", gen.count, "Number of scenes");
  gen_cmd->add_option("--agents", gen.agents, "Agents per scene");

  std::string scenes_dir, ablation;
  std::optional<std::size_t> modes, epochs, updates;
  std::optional<double> radius, beta;
  auto * enc_cmd = app.add_subcommand("train-encoder", "Train the key-position encoder");
  common(enc_cmd);
  enc_cmd->add_option("--scenes", scenes_dir, "Scene directory")->required();
  enc_cmd->add_option("--modes", modes, "Number of modes");
  enc_cmd->add_option("--radius", radius, "Local graph radius (m)");
  enc_cmd->add_option("--ablation", ablation, "none|type_attr|dir_attr_type_stack|full");
  enc_cmd->add_option("--epochs", epochs, "Training epochs");

  auto * rl_cmd = app.add_subcommand("train-rl", "Train the planning policy");
  common(rl_cmd);
  rl_cmd->add_option("--scenes", scenes_dir, "Scene directory")->required();
  rl_cmd->add_option("--beta", beta, "Mixed-reward weight on neighbours");
  rl_cmd->add_option("--ablation", ablation, "<transformer|vanilla>-<kinematic|direct>");
  rl_cmd->add_option("--updates", updates, "PPO updates");

  PredictArgs pred;
  auto * pred_cmd = app.add_subcommand("predict", "Run the full pipeline on one scene");
  common(pred_cmd);
  pred_cmd->add_option("--scene", pred.scene, "Scene file")->required();
  pred_cmd->add_option("--policy", pred.policy, "Policy checkpoint")->required();
  pred_cmd->add_option("--encoder", pred.encoder, "Encoder checkpoint");
  pred_cmd->add_option("--key-positions", pred.key_positions, "Precomputed key positions");

  std::vector<std::string> eval_preds, eval_scenes;
  auto * eval_cmd = app.add_subcommand("eval", "Compute metrics");
  common(eval_cmd);
  eval_cmd->add_option("--predictions", eval_preds, "Prediction files")->required();
  eval_cmd->add_option("--scene", eval_scenes, "Scene files, one per prediction file")->required();

  PlotArgs plot;
  auto * plot_cmd = app.add_subcommand("plot", "Render a scene to SVG");
  common(plot_cmd);
  plot_cmd->add_option("--scene", plot.scene, "Scene file")->required();
  plot_cmd->add_option("--predictions", plot.predictions, "Prediction file");
  plot_cmd->add_option("--key-positions", plot.key_positions, "Key-position file");
  plot_cmd->add_option("--trace", plot.trace, "Episode trace CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    return fail(kExitUsage, "usage", e.what());
  }

  try {
    Settings s = load_settings(config_path);
    if (seed) {
      s.seed = *seed;
    }
    if (modes) {
      s.encoder.n_modes = *modes;
    }
    if (radius) {
      s.encoder.radius = *radius;
    }
    if (epochs) {
      s.encoder_train.epochs = *epochs;
    }
    if (updates) {
      s.updates = *updates;
    }
    if (beta) {
      s.env.reward.beta = *beta;
    }
    if (!ablation.empty()) {
      if (app.got_subcommand(enc_cmd)) {
        s.encoder.ablation = encoder_ablation_from_string(ablation);
      } else {
        apply_rl_arm(ablation, s);
      }
    }
    s.encoder.validate();
    s.policy.validate();
    s.ppo.validate();
    s.env.reward.validate();

    const fs::path out(out_dir);
    if (app.got_subcommand(gen_cmd)) {
      cmd_gen(gen, s, out);
    } else if (app.got_subcommand(enc_cmd)) {
      cmd_train_encoder(scenes_dir, s, out);
    } else if (app.got_subcommand(rl_cmd)) {
      cmd_train_rl(scenes_dir, s, out);
    } else if (app.got_subcommand(pred_cmd)) {
      cmd_predict(pred, s, out);
    } else if (app.got_subcommand(eval_cmd)) {
      cmd_eval(eval_preds, eval_scenes, s, out);
    } else {
      cmd_plot(plot, s, out);
    }
  } catch (const NumericError & e) {
    return fail(kExitNumeric, "numeric", e.what());
  } catch (const ShapeError & e) {
    return fail(kExitValidation, "shape", e.what());
  } catch (const ParseError & e) {
    return fail(kExitValidation, "parse", e.what());
  } catch (const Error & e) {
    return fail(kExitValidation, "validation", e.what());
  } catch (const json::exception & e) {
    return fail(kExitValidation, "schema", e.what());
  } catch (const std::exception & e) {
    return fail(kExitValidation, "io", e.what());
  }
  return 0;
}

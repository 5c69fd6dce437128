// Copyright 2026 The sampid Authors
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

// Command-line front end. Exit codes: 0 ok, 2 configuration error,
// 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sampid/sampid.hpp"

namespace fs = std::filesystem;
using namespace sampid;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

PipelineConfig LoadOrDefault(const std::string& path) {
  return path.empty() ? PipelineConfig{} : LoadConfig(path);
}

ParamVector LoadTheta(const std::string& path) {
  const nlohmann::json j = ReadJson(path);
  // accept both a bare parameter file and a report holding one
  return ThetaFromJson(j.contains("theta") ? j["theta"] : j);
}

void WriteIdentification(const IdentifyResult& r, const fs::path& out,
                         const std::string& label) {
  fs::create_directories(out);
  WriteJson(out / "theta.json", ThetaToJson(r.theta));
  WriteJson(out / "report.json", r.ToJson());
  WriteText(out / "cost_curve.svg", CostCurveSvg({{label, r.opt}}));
  std::cout << "cost " << r.initial.total << " -> " << r.final.total << " after "
            << r.opt.evaluations << " evaluations\n"
            << ThetaToJson(r.theta).dump(2) << '\n';
}

struct Options {
  std::string config, out, data, excite, theta, baseline, kind = "horizon";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int threads = -1;
  bool random_plan = false;
};

PipelineConfig Config(const Options& o) {
  PipelineConfig c = LoadOrDefault(o.config);
  if (o.threads >= 0) c.threads = o.threads;
  return c;
}

int CmdGenData(const Options& o) {
  const PipelineConfig c = Config(o);
  const Datasets d = GenerateDatasets(c, c.seed);
  WriteDatasets(d, o.out);
  WriteJson(fs::path(o.out) / "config.json", ConfigToJson(c));
  for (const auto& t : d.stage1)
    std::cout << t->meta.source_id << ": " << t->Steps() << " steps"
              << (t->meta.fall_time >= 0.0
                      ? " (fell at " + std::to_string(t->meta.fall_time) + " s)"
                      : "")
              << '\n';
  std::cout << "validation: " << d.validation.front()->Steps() << " steps\n";
  return 0;
}

int CmdIdentify(const Options& o) {
  const PipelineConfig c = Config(o);
  const auto data = ReadTrajectoryDir(o.data, "stage1_");
  WriteIdentification(Stage1Identify(c, data, c.seed), o.out, "stage 1");
  return 0;
}

int CmdExcite(const Options& o) {
  const PipelineConfig c = Config(o);
  const ExcitationResult r =
      Excite(c, LoadTheta(o.theta), c.seed,
             o.random_plan ? ExplorationMode::kRandom : ExplorationMode::kActive);
  const fs::path out(o.out);
  fs::create_directories(out);
  WriteJson(out / "plan.json", PlanToJson(r.plan));
  WriteTrajectory(*r.d1, out / "excite_000");
  const FimEstimate& f = r.plan_eval.fim;
  WriteJson(out / "report.json",
            {{"objective", r.plan_eval.objective},
             {"penalty", r.penalty},
             {"trace_inverse", TraceInverse(f.matrix, RelativeRegularizer(
                                                          f.matrix, c.excitation.reg))},
             {"t_survived", f.t_survived},
             {"t_total", f.t_total},
             {"history", r.history},
             {"d1_steps", r.d1->Steps()}});
  std::cout << "plan objective " << r.plan_eval.objective << ", survived "
            << f.t_survived << " of " << f.t_total << " s\n";
  return 0;
}

int CmdRefine(const Options& o) {
  const PipelineConfig c = Config(o);
  std::vector<TrajectoryPtr> data = ReadTrajectoryDir(o.data, "stage1_");
  const auto d1 = ReadTrajectoryDir(o.excite.empty() ? o.data : o.excite, "excite_");
  data.insert(data.end(), d1.begin(), d1.end());
  WriteIdentification(Refine(c, LoadTheta(o.theta), data, c.seed), o.out, "stage 2");
  return 0;
}

int CmdEvaluate(const Options& o) {
  const PipelineConfig c = Config(o);
  const ModelDescriptor model = c.Model();
  const auto val = ReadTrajectoryDir(o.data, "validation_");
  if (val.front()->meta.model_name != model.name)
    throw ConfigurationError("validation data is for model '" +
                             val.front()->meta.model_name + "', config says '" +
                             model.name + "'");
  const ClipSet clips = SegmentSeconds(val, c.validation_h_min, c.validation_h_max,
                                       model.dt_control, c.seed + 99);
  const int th = ResolveThreads(c.threads);
  EvalMetrics m = EvaluatePrediction(LoadTheta(o.theta), clips, model, th);
  if (!o.baseline.empty())
    NormalizeAgainst(m, EvaluatePrediction(LoadTheta(o.baseline), clips, model, th));
  const nlohmann::json j = m.ToJson();
  if (!o.out.empty()) WriteJson(o.out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int CmdAblate(const Options& o) {
  const PipelineConfig c = Config(o);
  const nlohmann::json j = AblationToJson(RunAblation(o.kind, c, o.seeds));
  if (!o.out.empty()) WriteJson(o.out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int CmdFullRun(const Options& o) {
  const FullRunResult r = FullRun(Config(o), o.out);
  std::cout << r.report["metrics"].dump(2) << '\n'
            << "param_error " << r.report["param_error"].dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based system identification with active exploration"};
  app.require_subcommand(1);
  Options o;
  auto add_config = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--config,-c", o.config, "JSON configuration");
    if (required) opt->required();
    s->add_option("--threads", o.threads, "worker threads (0: all cores)");
  };

  auto* gen = app.add_subcommand("gen-data", "synthesize stage-1 and validation data");
  add_config(gen, false);
  gen->add_option("--out,-o", o.out, "output directory")->required();

  auto* ident = app.add_subcommand("identify", "stage-1 identification");
  add_config(ident, false);
  ident->add_option("--data,-d", o.data, "directory with stage1_*.jsonl")->required();
  ident->add_option("--out,-o", o.out, "output directory")->required();

  auto* exc = app.add_subcommand("excite", "optimize a command plan and record D1");
  add_config(exc, false);
  exc->add_option("--theta,-t", o.theta, "stage-1 parameter file")->required();
  exc->add_option("--out,-o", o.out, "output directory")->required();
  exc->add_flag("--random", o.random_plan, "use a random plan instead");

  auto* ref = app.add_subcommand("refine", "stage-2 identification on D0 + D1");
  add_config(ref, false);
  ref->add_option("--theta,-t", o.theta, "stage-1 parameter file")->required();
  ref->add_option("--data,-d", o.data, "directory with stage1_*.jsonl")->required();
  ref->add_option("--excite,-e", o.excite,
                  "directory with excite_*.jsonl (default: --data)");
  ref->add_option("--out,-o", o.out, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "prediction errors on validation data");
  add_config(ev, false);
  ev->add_option("--theta,-t", o.theta, "parameter file")->required();
  ev->add_option("--data,-d", o.data, "directory with validation_*.jsonl")->required();
  ev->add_option("--baseline,-b", o.baseline, "parameter file to normalize against");
  ev->add_option("--out,-o", o.out, "write metrics JSON here");

  auto* abl = app.add_subcommand("ablate", "horizon or motor-model ablation");
  add_config(abl, false);
  abl->add_option("--kind,-k", o.kind, "horizon | motor-model")
      ->check(CLI::IsMember({"horizon", "motor-model"}));
  abl->add_option("--seeds", o.seeds, "data seeds")->delimiter(',');
  abl->add_option("--out,-o", o.out, "write report JSON here");

  auto* full = app.add_subcommand("full-run", "both stages end to end");
  add_config(full, false);
  full->add_option("--out,-o", o.out, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return CmdGenData(o);
    if (*ident) return CmdIdentify(o);
    if (*exc) return CmdExcite(o);
    if (*ref) return CmdRefine(o);
    if (*ev) return CmdEvaluate(o);
    if (*abl) return CmdAblate(o);
    if (*full) return CmdFullRun(o);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

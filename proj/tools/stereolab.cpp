// stereolab: stereotype-bias dataset derivation and recall-gap auditing.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stereolab/csv.hpp"
#include "stereolab/manifest.hpp"
#include "stereolab/metrics.hpp"
#include "stereolab/profiler.hpp"
#include "stereolab/rng.hpp"
#include "stereolab/runner.hpp"
#include "stereolab/sampler.hpp"
#include "stereolab/synthbench.hpp"

namespace fs = std::filesystem;
using namespace stereolab;

namespace {

Split split_option(const std::string& s) {
  auto split = parse_split(s);
  if (!split) throw CLI::ValidationError("--split", "must be train or test");
  return *split;
}

int cmd_profile(const std::string& manifest_path, const std::string& split, const std::string& out) {
  const Manifest m = load_manifest(manifest_path);
  const auto report = profile_report(profile(m, split_option(split)));
  std::cout << report.text;
  if (!out.empty()) write_file(out, report.csv);
  return 0;
}

int cmd_subsample(const std::string& manifest_path, const std::string& spec_text, std::uint64_t seed,
                  const std::string& out, bool plan_only) {
  const Manifest m = load_manifest(manifest_path);
  const SubsetSpec spec = parse_subset_spec(spec_text, seed);
  Manifest input = m;
  if (std::holds_alternative<Biased>(spec.variant) && !is_balanced(m)) {
    std::cerr << "input is not balanced; balancing before biasing\n";
    input = balanced_subsample(m, SeedHasher(seed).add("balance").value());
  }
  const SamplePlan p = plan(input, spec);
  if (plan_only) {
    std::cout << describe_plan(input, p);
    return 0;
  }
  if (out.empty()) throw CLI::ValidationError("--out", "required unless --plan-only");
  const Manifest result = execute(input, p, spec.seed);
  save_manifest(result, out);
  std::cerr << "train " << m.split_size(Split::train) << " -> " << result.split_size(Split::train)
            << ", test " << result.split_size(Split::test) << " written to " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& manifest_path, const std::vector<std::string>& pred_paths,
                 const std::string& target, const std::string& reference, const std::string& out_dir,
                 const std::string& level, const std::string& stem) {
  const Manifest m = load_manifest(manifest_path);
  std::vector<RecallMatrix> runs;
  for (const auto& p : pred_paths) runs.push_back(evaluate(m, load_predictions(p)));
  std::map<BiasLevel, AggregateReport> agg;
  agg.emplace(BiasLevel::parse(level), aggregate(runs, target, reference));
  for (const auto& p : emit_reports(agg, out_dir, stem)) std::cerr << "wrote " << p.string() << "\n";
  std::cout << read_file(fs::path(out_dir) / (stem + "_table.txt"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stereolab: derive balanced and stereotype-biased datasets, audit group recall gaps"};
  app.require_subcommand(1);

  std::string manifest_path;
  std::string split = "train";
  std::string out;
  auto* profile_cmd = app.add_subcommand("profile", "Demographic profile of a manifest split");
  profile_cmd->add_option("manifest", manifest_path, "Manifest CSV")->required();
  profile_cmd->add_option("--split", split, "train or test")->capture_default_str();
  profile_cmd->add_option("--out", out, "Write the profile CSV here");

  std::string spec;
  std::uint64_t seed = 0;
  bool plan_only = false;
  auto* sub_cmd = app.add_subcommand("subsample", "Generate a stratified, balanced or biased subset");
  sub_cmd->add_option("manifest", manifest_path, "Manifest CSV")->required();
  sub_cmd->add_option("--spec", spec,
                      "stratified:r=0.5 | balanced | biased:label=angry,group=female,b=-0.8")
      ->required();
  sub_cmd->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  sub_cmd->add_option("--out", out, "Output manifest CSV");
  sub_cmd->add_flag("--plan-only", plan_only, "Print target counts without sampling");

  std::vector<std::string> preds;
  std::string target_group;
  std::string reference_group;
  std::string out_dir = "reports";
  std::string level = "0.0";
  std::string stem = "report";
  auto* eval_cmd = app.add_subcommand("evaluate", "Per-group recall and recall differences across runs");
  eval_cmd->add_option("manifest", manifest_path, "Manifest CSV with the test split")->required();
  eval_cmd->add_option("predictions", preds, "One predictions CSV per run")->required();
  eval_cmd->add_option("--target-group", target_group)->required();
  eval_cmd->add_option("--reference-group", reference_group)->required();
  eval_cmd->add_option("--out-dir", out_dir)->capture_default_str();
  eval_cmd->add_option("--bias-level", level, "Column key for these runs")->capture_default_str();
  eval_cmd->add_option("--stem", stem, "Report file prefix")->capture_default_str();

  SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic Gaussian manifest");
  synth_cmd->add_option("--labels", synth.n_labels)->capture_default_str();
  synth_cmd->add_option("--groups", synth.n_groups)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim)->capture_default_str();
  synth_cmd->add_option("--per-cell", synth.samples_per_cell)->capture_default_str();
  synth_cmd->add_option("--test-per-cell", synth.test_per_cell)->capture_default_str();
  synth_cmd->add_option("--class-sep", synth.class_sep)->capture_default_str();
  synth_cmd->add_option("--group-shift", synth.group_shift)->capture_default_str();
  synth_cmd->add_option("--sigma", synth.noise_sigma)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out", out)->required();

  std::string model_path;
  std::string predict_manifest;
  std::string predictions_out;
  auto* ctrain_cmd = app.add_subcommand("centroid-train", "Fit the nearest-centroid classifier");
  ctrain_cmd->add_option("train", manifest_path, "Training manifest CSV")->required();
  ctrain_cmd->add_option("--out", model_path, "Model JSON");
  ctrain_cmd->add_option("--predict", predict_manifest, "Also predict this manifest's test split");
  ctrain_cmd->add_option("--predictions-out", predictions_out, "Predictions CSV for --predict");

  auto* cpredict_cmd = app.add_subcommand("centroid-predict", "Predict a test split with a saved model");
  cpredict_cmd->add_option("model", model_path, "Model JSON")->required();
  cpredict_cmd->add_option("manifest", manifest_path, "Manifest CSV with the test split")->required();
  cpredict_cmd->add_option("--out", predictions_out, "Predictions CSV")->required();

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run a bias grid experiment");
  run_cmd->add_option("--config", config_path, "key = value experiment file")->required();
  run_cmd->add_option("--out-dir", out_dir, "Results directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*profile_cmd) return cmd_profile(manifest_path, split, out);
    if (*sub_cmd) return cmd_subsample(manifest_path, spec, seed, out, plan_only);
    if (*eval_cmd) {
      return cmd_evaluate(manifest_path, preds, target_group, reference_group, out_dir, level, stem);
    }
    if (*synth_cmd) {
      const Manifest m = generate(synth);
      save_manifest(m, out);
      std::cerr << "wrote " << m.size() << " records to " << out << "\n";
      return 0;
    }
    if (*ctrain_cmd) {
      if (model_path.empty() && predict_manifest.empty()) {
        throw CLI::ValidationError("centroid-train", "give --out and/or --predict");
      }
      if (!predict_manifest.empty() && predictions_out.empty()) {
        throw CLI::ValidationError("--predictions-out", "required with --predict");
      }
      const CentroidModel model = fit_centroid(load_manifest(manifest_path));
      for (const auto& missing : model.missing) {
        std::cerr << "warning: label '" << missing << "' has no training data and is never predicted\n";
      }
      if (!model_path.empty()) save_model(model, model_path);
      if (!predict_manifest.empty()) {
        save_predictions(predict(model, load_manifest(predict_manifest)), predictions_out);
      }
      return 0;
    }
    if (*cpredict_cmd) {
      save_predictions(predict(load_model(model_path), load_manifest(manifest_path)), predictions_out);
      return 0;
    }
    if (*run_cmd) {
      const ExperimentConfig config = load_experiment_config(config_path);
      const GridResult result = run_grid(config, out_dir);
      std::cerr << result.records.size() << " runs (" << result.resumed << " resumed, " << result.failed
                << " failed); reports in " << (fs::path(out_dir) / "reports").string() << "\n";
      if (result.biased.empty()) return 2;
      std::cout << read_file(fs::path(out_dir) / "reports" / "biased_table.txt");
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

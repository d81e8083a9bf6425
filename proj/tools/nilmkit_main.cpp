#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nilm/cli/commands.hpp"
#include "nilm/cli/config.hpp"
#include "nilm/errors.hpp"

namespace {

using nilm::cli::PipelineConfig;

void print_schedule_table(const nilm::cli::PipelineConfig& cfg, const std::string& split,
                          const nilm::sns::SynthesisManifest& manifest) {
  const auto& schedule = cfg.schedule_for(split);
  std::cout << "w\tb_comb\tb_repr\treprs/comb\texamples\n";
  for (const auto& entry : schedule.entries) {
    const auto combos = manifest.combos.count(entry.w) ? manifest.combos.at(entry.w) : 0;
    const auto count = manifest.counts.count(entry.w) ? manifest.counts.at(entry.w) : 0;
    std::cout << entry.w << '\t' << entry.b_comb_hat << '\t';
    if (entry.b_repr_hat > 0)
      std::cout << entry.b_repr_hat;
    else
      std::cout << '-';
    std::cout << '\t';
    if (combos > 0)
      std::cout << (count + combos - 1) / combos;
    else
      std::cout << '-';
    std::cout << '\t' << count << "\n";
  }
  if (!manifest.truncations.empty())
    std::cout << "warning: " << manifest.truncations.size()
              << " combination(s) truncated by pattern availability\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nilmkit: synthetic aggregate-load datasets and the COLD concurrent-load "
               "identifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;
  std::optional<std::string> out_override;
  app.add_option("--config", config_path, "pipeline configuration JSON");
  app.add_option("--seed", seed_override, "override the pipeline seed");
  app.add_option("--threads", threads_override, "worker threads for batch stages");
  app.add_option("--out", out_override, "override the output directory");

  auto* init_cmd = app.add_subcommand("init-config", "write the default desk-scale config");
  std::string init_target = "nilmkit.json";
  init_cmd->add_option("path", init_target, "where to write the config");

  auto* gen_cmd = app.add_subcommand("gen-toy", "generate the parametric toy corpus");
  auto* norm_cmd = app.add_subcommand("normalize", "normalize raw signatures into the baseline");
  auto* synth_cmd = app.add_subcommand("synthesize", "synthesize an aggregate dataset split");
  auto* feat_cmd = app.add_subcommand("featurize", "compute spectrogram features for a split");
  auto* train_cmd = app.add_subcommand("train", "train the identification model");
  auto* search_cmd = app.add_subcommand("search", "hyperparameter search (successive halving)");
  auto* tune_cmd = app.add_subcommand("tune-threshold", "tune the decision threshold");
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate the trained model on a split");

  std::string synth_split = "train", feat_split = "train", tune_split = "val";
  std::string eval_split = "test", eval_tune_split = "val";
  std::optional<double> eval_threshold;
  synth_cmd->add_option("--split", synth_split, "train|val|test")->required();
  feat_cmd->add_option("--split", feat_split, "train|val|test")->required();
  tune_cmd->add_option("--split", tune_split, "split to tune on");
  eval_cmd->add_option("--split", eval_split, "split to evaluate");
  eval_cmd->add_option("--threshold", eval_threshold, "fixed decision threshold");
  eval_cmd->add_option("--tune-on", eval_tune_split, "split used to tune the threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (init_cmd->parsed()) {
      const auto cfg = nilm::cli::default_desk_config();
      std::ofstream out(init_target);
      if (!out) throw nilm::DataError("cannot write " + init_target);
      out << nilm::cli::config_to_json(cfg).dump(2) << "\n";
      std::cout << "wrote " << init_target << "\n";
      return 0;
    }

    PipelineConfig cfg = config_path.empty() ? nilm::cli::default_desk_config()
                                             : PipelineConfig::load(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (threads_override) cfg.threads = *threads_override;
    if (out_override) cfg.out_dir = *out_override;

    if (gen_cmd->parsed()) {
      const int n = nilm::cli::cmd_gen_toy(cfg);
      std::cout << "wrote " << n << " signatures to " << cfg.signatures_dir.string() << "\n";
    } else if (norm_cmd->parsed()) {
      const auto summary = nilm::cli::cmd_normalize(cfg);
      std::cout << "accepted " << summary.accepted << " signatures\n";
      for (const auto& [code, n] : summary.rejected_by_code)
        std::cout << "rejected " << n << " (" << code << ")\n";
      if (summary.rejected_by_code.empty()) std::cout << "rejected 0\n";
    } else if (synth_cmd->parsed()) {
      const auto manifest = nilm::cli::cmd_synthesize(cfg, synth_split);
      print_schedule_table(cfg, synth_split, manifest);
    } else if (feat_cmd->parsed()) {
      const auto summary = nilm::cli::cmd_featurize(cfg, feat_split);
      std::cout << "featurized " << summary.count << " examples (" << summary.t << "x"
                << summary.v << ")";
      if (summary.stats_written) std::cout << ", normalization stats fit";
      std::cout << "\n";
    } else if (train_cmd->parsed()) {
      const auto summary = nilm::cli::cmd_train(cfg);
      std::cout << "best validation weighted mF1 " << summary.best_val_mf1 << " at step "
                << summary.best_step << " (" << summary.steps << " steps)\n";
    } else if (search_cmd->parsed()) {
      const auto result = nilm::cli::cmd_search(cfg);
      std::cout << "best trial " << result.best_trial << " score " << result.best_score << "\n";
    } else if (tune_cmd->parsed()) {
      const auto result = nilm::cli::cmd_tune_threshold(cfg, tune_split);
      std::cout << "threshold " << result.threshold << " weighted mF1 " << result.weighted_mf1
                << "\n";
    } else if (eval_cmd->parsed()) {
      const auto report = nilm::cli::cmd_evaluate(cfg, eval_split, eval_threshold,
                                                  eval_tune_split);
      std::cout << "split " << eval_split << ": weighted mF1 " << report.weighted_mf1
                << " at threshold " << report.threshold << "\n";
      for (const auto& [w, score] : report.per_w)
        std::cout << "  w=" << w << "  n=" << score.count << "  mean F1 " << score.mean_f1
                  << "\n";
    }
  } catch (const nilm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nilm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include "nilm/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "nilm/errors.hpp"
#include "nilm/io/formats.hpp"
#include "nilm/signal/analysis.hpp"
#include "nilm/signal/normalize.hpp"
#include "nilm/sns/synthesize.hpp"
#include "nilm/util/hash.hpp"
#include "nilm/util/parallel.hpp"

namespace nilm::cli {

using nlohmann::json;

namespace {

constexpr double kThresholdGridStep = 1e-4;

sns::PatternMap split_for(const PipelineConfig& cfg, const sns::BaselineSplit& split,
                          const std::string& name) {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  if (name == "test") return split.test;
  throw ConfigError("unknown split '" + name + "'");
}

void check_baseline_hash(const PipelineConfig& cfg) {
  const auto file = cfg.baseline_dir / "baseline.summary.json";
  std::ifstream in(file);
  if (!in) throw DataError("missing baseline summary: " + file.string() + " (run normalize)");
  json j;
  in >> j;
  if (j.at("config_hash").get<std::uint64_t>() != cfg.normalization_hash())
    throw DataError("baseline was produced by a different normalization config: " +
                    file.string());
}

train::FeatureDataset load_normalized_features(const PipelineConfig& cfg,
                                               const std::string& split) {
  auto data = io::read_feature_cache(cfg.feature_cache_path(split), cfg.feature_hash(split));
  const auto stats = io::read_feature_stats(cfg.stats_path());
  if (stats.config_hash != cfg.feature_hash("train"))
    throw DataError("feature stats were fit under a different configuration");
  for (auto& x : data.x) {
    features::Spectrogram spec;
    spec.data = std::move(x);
    x = features::normalize_spectrogram(spec, stats).data;
  }
  return data;
}

}  // namespace

int cmd_gen_toy(const PipelineConfig& cfg) {
  const auto specs = cfg.toy_specs.empty() ? default_toy_specs() : cfg.toy_specs;
  if (cfg.toy_per_label < 1) throw ConfigError("gen-toy: per_label must be >= 1");
  int written = 0;
  for (const auto& spec : specs) {
    for (int i = 0; i < cfg.toy_per_label; ++i) {
      io::write_signature(cfg.signatures_dir, generate_toy_signature(spec, i, cfg.seed));
      ++written;
    }
  }
  return written;
}

NormalizeSummary cmd_normalize(const PipelineConfig& cfg) {
  const auto files = io::list_signature_files(cfg.signatures_dir);
  if (files.empty()) throw DataError("no signatures in " + cfg.signatures_dir.string());

  struct Outcome {
    std::optional<signal::Signature> accepted;
    std::optional<signal::RejectionReason> rejected;
    std::string source_id;
    std::string label;
  };
  std::vector<Outcome> outcomes(files.size());

  util::parallel_for(files.size(), cfg.threads, [&](std::size_t i) {
    const auto raw = io::read_signature(files[i]);
    outcomes[i].source_id = raw.source_id;
    outcomes[i].label = raw.label;
    auto result = signal::normalize_signature(raw, cfg.normalization);
    if (signal::is_rejected(result))
      outcomes[i].rejected = signal::rejection(result);
    else
      outcomes[i].accepted = signal::value(result);
  });

  fs::create_directories(cfg.baseline_dir);
  NormalizeSummary summary;
  json rejections = json::array();
  std::map<std::string, double> rms_sum;
  std::map<std::string, int> rms_count;
  for (const auto& out : outcomes) {
    if (out.accepted) {
      io::write_signature(cfg.baseline_dir, *out.accepted);
      ++summary.accepted;
      double sq = 0.0;
      for (const double c : out.accepted->current.samples) sq += c * c;
      rms_sum[out.label] +=
          std::sqrt(sq / static_cast<double>(out.accepted->current.size()));
      rms_count[out.label] += 1;
    } else {
      const std::string code = signal::to_string(out.rejected->code);
      summary.rejected_by_code[code] += 1;
      rejections.push_back(
          {{"source_id", out.source_id}, {"code", code}, {"detail", out.rejected->detail}});
    }
  }
  for (const auto& [label, total] : rms_sum)
    summary.per_label_rms[label] = total / rms_count[label];

  json j;
  j["config_hash"] = cfg.normalization_hash();
  j["accepted"] = summary.accepted;
  j["rejections"] = rejections;
  json by_code = json::object();
  for (const auto& [code, n] : summary.rejected_by_code) by_code[code] = n;
  j["rejected_by_code"] = by_code;
  json rms = json::object();
  for (const auto& [label, value] : summary.per_label_rms) rms[label] = value;
  j["per_label_rms"] = rms;
  std::ofstream out(cfg.baseline_dir / "baseline.summary.json");
  out << j.dump(2) << "\n";
  return summary;
}

sns::SynthesisManifest cmd_synthesize(const PipelineConfig& cfg, const std::string& split) {
  check_baseline_hash(cfg);
  const auto baseline = io::read_signature_dir(cfg.baseline_dir);
  const auto splits = sns::split_baseline(baseline, cfg.split_fractions, cfg.seed);
  const auto patterns = split_for(cfg, splits, split);
  if (patterns.empty()) throw DataError("split '" + split + "' received no signatures");

  auto schedule = cfg.schedule_for(split);
  schedule.seed = util::mix_seed(cfg.seed, util::fnv1a64(split));

  std::vector<std::string> universe;
  for (const auto& [label, sigs] : patterns) universe.push_back(label);

  fs::create_directories(cfg.datasets_dir);
  io::DatasetWriter writer(cfg.dataset_base(split), schedule.t_obs, cfg.normalization.f_down,
                           universe, cfg.dataset_hash(split));
  const auto manifest = sns::synthesize_collection(
      patterns, schedule, cfg.normalization.f_ref, cfg.normalization.f_down, cfg.threads,
      [&writer](sns::AggregateExample&& ex) { writer.add(ex); });
  writer.finish(manifest);
  return manifest;
}

FeaturizeSummary cmd_featurize(const PipelineConfig& cfg, const std::string& split) {
  io::DatasetReader reader(cfg.dataset_base(split));
  if (reader.config_hash() != cfg.dataset_hash(split))
    throw DataError("dataset '" + split + "' was synthesized under a different configuration");

  features::FeatureStatsAccumulator stats_acc;
  std::optional<io::FeatureCacheWriter> writer;
  FeaturizeSummary summary;

  fs::create_directories(cfg.features_dir);
  const std::uint64_t feat_hash = cfg.feature_hash(split);
  for (std::int64_t i = 0; i < reader.size(); ++i) {
    const auto rec = reader.read(i);
    const auto spec = features::spectrogram(rec.current, cfg.stft,
                                            "example-" + std::to_string(rec.id));
    if (!writer) {
      summary.t = spec.t();
      summary.v = spec.v();
      writer.emplace(cfg.feature_cache_path(split), spec.t(), spec.v(), cfg.stft.scale,
                     static_cast<int>(reader.universe().size()), feat_hash);
    }
    writer->add(spec, rec.w, rec.labels);
    // Normalization statistics are fit on the training split only.
    if (split == "train") stats_acc.add(spec);
  }
  if (!writer) throw DataError("dataset '" + split + "' is empty");
  writer->finish();
  summary.count = reader.size();

  if (split == "train") {
    io::write_feature_stats(cfg.stats_path(), stats_acc.finalize(feat_hash));
    summary.stats_written = true;
  }
  return summary;
}

TrainSummary cmd_train(const PipelineConfig& cfg) {
  const auto train_set = load_normalized_features(cfg, "train");
  const auto val_set = load_normalized_features(cfg, "val");

  cold::ColdHyperParams hp = cfg.model;
  hp.v_in = static_cast<int>(train_set.x.front().cols());
  hp.n_labels = static_cast<int>(train_set.y.front().size());
  hp.validate();

  train::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;

  auto params = cold::init_params(hp, util::mix_seed(cfg.seed, util::fnv1a64("init")));
  const auto result = train::train(std::move(params), train_set, val_set, tc);

  fs::create_directories(cfg.out_dir);
  io::write_checkpoint(cfg.checkpoint_path(), result.best_params, cfg.seed,
                       cfg.checkpoint_hash());
  io::write_training_curve(cfg.curve_path(), result.curve);

  TrainSummary summary;
  summary.best_val_mf1 = result.best_val_mf1;
  summary.best_step = result.best_step;
  summary.steps = result.curve.empty() ? 0 : result.curve.back().step;
  return summary;
}

train::AshaResult cmd_search(const PipelineConfig& cfg) {
  const auto train_set = load_normalized_features(cfg, "train");
  const auto val_set = load_normalized_features(cfg, "val");
  const int v_in = static_cast<int>(train_set.x.front().cols());
  const int n_labels = static_cast<int>(train_set.y.front().size());

  struct Trial {
    cold::ColdHyperParams hp;
    train::TrainConfig tc;
    std::optional<train::TrainableModel> model;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(cfg.asha.n_trials));
  const auto& space = cfg.asha_space;
  for (int id = 0; id < cfg.asha.n_trials; ++id) {
    util::Rng rng(util::mix_seed(cfg.seed, util::fnv1a64("asha-trial"),
                                 static_cast<std::uint64_t>(id)));
    auto& trial = trials[static_cast<std::size_t>(id)];
    trial.hp.q = space.q[rng.below(space.q.size())];
    trial.hp.k = space.k[rng.below(space.k.size())];
    trial.hp.n_head = space.n_head[rng.below(space.n_head.size())];
    if (trial.hp.q % trial.hp.n_head != 0) trial.hp.n_head = 1;
    trial.hp.p_d = rng.uniform(space.p_d[0], space.p_d[1]);
    trial.hp.v_in = v_in;
    trial.hp.n_labels = n_labels;
    trial.tc.lr = std::exp(rng.uniform(std::log(space.lr[0]), std::log(space.lr[1])));
    trial.tc.weight_decay = rng.uniform(space.weight_decay[0], space.weight_decay[1]);
    trial.tc.batch = space.batch[rng.below(space.batch.size())];
    trial.tc.epochs = cfg.asha.max_resource;
    trial.tc.seed = util::mix_seed(cfg.seed, static_cast<std::uint64_t>(id));
  }

  const auto objective = [&](int trial_id, int resource) {
    auto& trial = trials[static_cast<std::size_t>(trial_id)];
    if (!trial.model) {
      train::TrainableModel model;
      model.params = cold::init_params(trial.hp, trial.tc.seed);
      model.cfg = trial.tc;
      trial.model = std::move(model);
    }
    return trial.model->advance_to(resource, train_set, val_set);
  };

  const auto result = train::asha_search(cfg.asha, objective);

  fs::create_directories(cfg.out_dir);
  std::ofstream table(cfg.out_dir / "trials.tsv");
  table << "trial\tq\tk\tn_head\tp_d\tlr\tweight_decay\tbatch\trung\tresource\tscore\n";
  for (const auto& rec : result.table) {
    const auto& trial = trials[static_cast<std::size_t>(rec.trial_id)];
    table << rec.trial_id << '\t' << trial.hp.q << '\t' << trial.hp.k << '\t'
          << trial.hp.n_head << '\t' << trial.hp.p_d << '\t' << trial.tc.lr << '\t'
          << trial.tc.weight_decay << '\t' << trial.tc.batch << '\t' << rec.rung_reached
          << '\t' << rec.resource << '\t' << rec.score << "\n";
  }

  if (result.best_trial >= 0) {
    const auto& best = trials[static_cast<std::size_t>(result.best_trial)];
    json j{{"trial", result.best_trial},
           {"score", result.best_score},
           {"model",
            {{"q", best.hp.q}, {"k", best.hp.k}, {"n_head", best.hp.n_head}, {"p_d", best.hp.p_d}}},
           {"train",
            {{"lr", best.tc.lr},
             {"weight_decay", best.tc.weight_decay},
             {"batch", best.tc.batch}}}};
    std::ofstream out(cfg.out_dir / "best_config.json");
    out << j.dump(2) << "\n";
  }
  return result;
}

train::ThresholdResult cmd_tune_threshold(const PipelineConfig& cfg, const std::string& split) {
  std::uint64_t ckpt_hash = 0;
  const auto params = io::read_checkpoint(cfg.checkpoint_path(), nullptr, &ckpt_hash);
  if (ckpt_hash != cfg.checkpoint_hash())
    throw DataError("checkpoint was trained under a different configuration");
  const auto data = load_normalized_features(cfg, split);
  const auto probs = train::predict_probabilities(params, data);
  return train::tune_threshold(probs, data.y, data.w, kThresholdGridStep);
}

train::EvalReport cmd_evaluate(const PipelineConfig& cfg, const std::string& split,
                               std::optional<double> threshold,
                               const std::string& tune_split) {
  std::uint64_t ckpt_hash = 0;
  const auto params = io::read_checkpoint(cfg.checkpoint_path(), nullptr, &ckpt_hash);
  if (ckpt_hash != cfg.checkpoint_hash())
    throw DataError("checkpoint was trained under a different configuration");

  double t = 0.5;
  if (threshold) {
    t = *threshold;
  } else {
    const auto tuned_data = load_normalized_features(cfg, tune_split);
    const auto tuned_probs = train::predict_probabilities(params, tuned_data);
    t = train::tune_threshold(tuned_probs, tuned_data.y, tuned_data.w, kThresholdGridStep)
            .threshold;
  }

  const auto data = load_normalized_features(cfg, split);
  const auto probs = train::predict_probabilities(params, data);
  const auto report = train::evaluate_predictions(probs, data.y, data.w, t);

  std::vector<std::string> universe;
  {
    io::DatasetReader reader(cfg.dataset_base(split));
    universe = reader.universe();
  }

  fs::create_directories(cfg.out_dir);
  io::write_eval_report(cfg.out_dir / ("eval_" + split + ".json"), report, universe,
                        cfg.checkpoint_hash());

  // Plot data: mean F1 per concurrency level and per label.
  {
    std::ofstream per_w(cfg.out_dir / ("per_w_f1_" + split + ".tsv"));
    per_w << "w\tcount\tmean_f1\n";
    for (const auto& [w, score] : report.per_w)
      per_w << w << '\t' << score.count << '\t' << score.mean_f1 << "\n";
  }
  {
    std::ofstream per_label(cfg.out_dir / ("per_label_f1_" + split + ".tsv"));
    per_label << "label\tf1\n";
    for (std::size_t i = 0; i < report.per_label_f1.size(); ++i)
      per_label << universe[i] << '\t' << report.per_label_f1[i] << "\n";
  }
  {
    // Labels ranked by mean baseline RMS current, lowest first (the hardest
    // categories tend to be the quietest ones).
    std::ifstream in(cfg.baseline_dir / "baseline.summary.json");
    if (in) {
      json j;
      in >> j;
      std::vector<std::pair<double, std::string>> by_rms;
      for (const auto& [label, value] : j.at("per_label_rms").items())
        by_rms.emplace_back(value.get<double>(), label);
      std::sort(by_rms.begin(), by_rms.end());
      std::map<std::string, double> label_f1;
      for (std::size_t i = 0; i < universe.size(); ++i)
        label_f1[universe[i]] = report.per_label_f1[i];
      std::ofstream out(cfg.out_dir / ("lowest_rms_top10_" + split + ".tsv"));
      out << "label\tmean_rms_a\tf1\n";
      const std::size_t top = std::min<std::size_t>(10, by_rms.size());
      for (std::size_t i = 0; i < top; ++i) {
        const auto& [rms, label] = by_rms[i];
        const auto it = label_f1.find(label);
        out << label << '\t' << rms << '\t'
            << (it == label_f1.end() ? -1.0 : it->second) << "\n";
      }
    }
  }
  return report;
}

}  // namespace nilm::cli

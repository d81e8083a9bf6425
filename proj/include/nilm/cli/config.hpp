#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nilm/cli/toygen.hpp"
#include "nilm/cold/model.hpp"
#include "nilm/features/spectrogram.hpp"
#include "nilm/signal/types.hpp"
#include "nilm/sns/types.hpp"
#include "nilm/train/asha.hpp"
#include "nilm/train/trainer.hpp"

namespace nilm::cli {

namespace fs = std::filesystem;

struct AshaSpace {
  std::vector<int> q{16, 32};
  std::vector<int> k{1, 2};
  std::vector<int> n_head{1, 2};
  std::array<double, 2> p_d{0.0, 0.3};
  std::array<double, 2> lr{1e-4, 3e-3};          // log-uniform
  std::array<double, 2> weight_decay{0.0, 1e-2};
  std::vector<int> batch{32, 64};
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  int threads = 1;

  fs::path signatures_dir = "work/signatures";
  fs::path baseline_dir = "work/baseline";
  fs::path datasets_dir = "work/datasets";
  fs::path features_dir = "work/features";
  fs::path out_dir = "work/out";

  signal::NormalizationConfig normalization;
  std::array<double, 3> split_fractions{0.6, 0.1, 0.3};
  sns::SynthesisSchedule schedule_train;
  sns::SynthesisSchedule schedule_val;
  sns::SynthesisSchedule schedule_test;

  features::StftConfig stft;
  cold::ColdHyperParams model{32, 2, 2, 0.1, 0, 0};  // n_labels/v_in filled from data
  train::TrainConfig train;
  train::AshaConfig asha;
  AshaSpace asha_space;

  int toy_per_label = 20;
  std::vector<ToySignatureSpec> toy_specs;  // empty = built-in default corpus

  static PipelineConfig load(const fs::path& file);
  static PipelineConfig from_json(const nlohmann::json& j);

  const sns::SynthesisSchedule& schedule_for(const std::string& split) const;

  fs::path dataset_base(const std::string& split) const { return datasets_dir / split; }
  fs::path feature_cache_path(const std::string& split) const {
    return features_dir / (split + ".feat");
  }
  fs::path stats_path() const { return features_dir / "train.stats"; }
  fs::path checkpoint_path() const { return out_dir / "model.ckpt"; }
  fs::path curve_path() const { return out_dir / "training_curve.tsv"; }

  // Config hashes chained through the pipeline; every derived artifact
  // embeds the hash of the configuration that produced it.
  std::uint64_t normalization_hash() const;
  std::uint64_t dataset_hash(const std::string& split) const;
  std::uint64_t feature_hash(const std::string& split) const;
  std::uint64_t checkpoint_hash() const;
};

// The default desk-scale configuration used by `nilmkit init-config` and the
// acceptance runs: 8 toy labels, w in {1,2,3}, 1 s windows at 1 kHz.
PipelineConfig default_desk_config();

nlohmann::json schedule_to_json(const sns::SynthesisSchedule& schedule);
sns::SynthesisSchedule schedule_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const PipelineConfig& cfg);

}  // namespace nilm::cli

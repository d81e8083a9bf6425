#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nilm/cold/model.hpp"
#include "nilm/features/spectrogram.hpp"
#include "nilm/signal/types.hpp"
#include "nilm/sns/types.hpp"
#include "nilm/train/metrics.hpp"
#include "nilm/train/trainer.hpp"

namespace nilm::io {

namespace fs = std::filesystem;

// --- Canonical signature files -------------------------------------------
// <id>.sig: little-endian f32 interleaved (current, voltage) pairs.
// <id>.sig.meta: JSON sidecar {label, rate, source_id}.

void write_signature(const fs::path& dir, const signal::Signature& sig);
signal::Signature read_signature(const fs::path& sig_file);

// All *.sig files under dir, sorted by filename.
std::vector<fs::path> list_signature_files(const fs::path& dir);
sns::PatternMap read_signature_dir(const fs::path& dir);

// --- Synthesized datasets --------------------------------------------------
// <base>.bin: fixed-length little-endian f32 current records.
// <base>.manifest: text; '#' header lines then one TSV row per example.
// <base>.summary.json: universe, per-w counts, truncations, config hash.

class DatasetWriter {
 public:
  DatasetWriter(const fs::path& base, double t_obs, double f_down,
                const std::vector<std::string>& universe, std::uint64_t config_hash);
  void add(const sns::AggregateExample& example);
  void finish(const sns::SynthesisManifest& manifest);
  std::int64_t count() const { return count_; }

 private:
  fs::path base_;
  double t_obs_;
  double f_down_;
  std::vector<std::string> universe_;
  std::uint64_t config_hash_;
  std::int64_t count_ = 0;
  std::size_t record_len_;
  std::ofstream bin_;
  std::ofstream manifest_;
};

struct DatasetRecord {
  std::uint64_t id = 0;
  int w = 0;
  std::vector<std::uint8_t> labels;
  signal::Waveform current;
};

class DatasetReader {
 public:
  explicit DatasetReader(const fs::path& base);
  const std::vector<std::string>& universe() const { return universe_; }
  std::uint64_t config_hash() const { return config_hash_; }
  double t_obs() const { return t_obs_; }
  double f_down() const { return f_down_; }
  std::int64_t size() const { return count_; }
  DatasetRecord read(std::int64_t index);

 private:
  fs::path base_;
  std::vector<std::string> universe_;
  std::uint64_t config_hash_ = 0;
  double t_obs_ = 0.0;
  double f_down_ = 0.0;
  std::int64_t count_ = 0;
  std::size_t record_len_ = 0;
  std::vector<int> w_;
  std::vector<std::vector<std::uint8_t>> labels_;
  std::ifstream bin_;
};

// --- Feature cache ----------------------------------------------------------
// Binary: magic, t, v, scale, n_labels, config hash, count, then per record
// (w: u32, multi-hot: u8[n_labels], data: f32[t*v]).

struct FeatureCacheHeader {
  int t = 0;
  int v = 0;
  features::Scale scale = features::Scale::LogMagnitude;
  int n_labels = 0;
  std::uint64_t config_hash = 0;
  std::int64_t count = 0;
};

class FeatureCacheWriter {
 public:
  FeatureCacheWriter(const fs::path& file, int t, int v, features::Scale scale, int n_labels,
                     std::uint64_t config_hash);
  void add(const features::Spectrogram& spec, int w, const std::vector<std::uint8_t>& labels);
  void finish();

 private:
  fs::path file_;
  FeatureCacheHeader header_;
  std::ofstream out_;
};

FeatureCacheHeader read_feature_cache_header(const fs::path& file);
// Loads the whole cache into memory (desk-scale datasets).
train::FeatureDataset read_feature_cache(const fs::path& file, std::uint64_t expected_hash);

void write_feature_stats(const fs::path& file, const features::FeatureStats& stats);
features::FeatureStats read_feature_stats(const fs::path& file);

// --- Checkpoints -------------------------------------------------------------
// Header (format version, hyperparameters, seed) followed by raw little-endian
// f32 tensors in declaration order.

void write_checkpoint(const fs::path& file, const cold::ColdParams& params, std::uint64_t seed,
                      std::uint64_t config_hash);
cold::ColdParams read_checkpoint(const fs::path& file, std::uint64_t* seed = nullptr,
                                 std::uint64_t* config_hash = nullptr);
std::vector<char> checkpoint_bytes(const cold::ColdParams& params, std::uint64_t seed,
                                   std::uint64_t config_hash);

// --- Text artifacts ----------------------------------------------------------

void write_training_curve(const fs::path& file, const std::vector<train::CurvePoint>& curve);

void write_eval_report(const fs::path& json_file, const train::EvalReport& report,
                       const std::vector<std::string>& universe, std::uint64_t config_hash);

}  // namespace nilm::io

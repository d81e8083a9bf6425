#include "nilm/io/formats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nilm/errors.hpp"
#include "nilm/util/binio.hpp"

namespace nilm::io {

using nlohmann::json;
using namespace nilm::util;

namespace {

constexpr std::uint32_t kFeatureMagic = 0x4346434eu;     // "NCFC"
constexpr std::uint32_t kStatsMagic = 0x5453434eu;       // "NCST"
constexpr std::uint32_t kCheckpointMagic = 0x4b43434eu;  // "NCCK"
constexpr std::uint32_t kCheckpointVersion = 1;

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::binary) {
  std::ofstream out(p, mode);
  if (!out) throw DataError("cannot open for writing: " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::binary) {
  std::ifstream in(p, mode);
  if (!in) throw DataError("cannot open for reading: " + p.string());
  return in;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

template <typename T>
std::string join_num(const std::vector<T>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(parts[i]);
  }
  return out;
}

}  // namespace

// --- Signatures -------------------------------------------------------------

void write_signature(const fs::path& dir, const signal::Signature& sig) {
  fs::create_directories(dir);
  const fs::path sig_file = dir / (sig.source_id + ".sig");
  auto out = open_out(sig_file);
  const std::size_t n = sig.current.size();
  for (std::size_t i = 0; i < n; ++i) {
    write_f32(out, static_cast<float>(sig.current.samples[i]));
    write_f32(out, static_cast<float>(sig.voltage.samples[i]));
  }
  out.close();

  json meta;
  meta["label"] = sig.label;
  meta["rate"] = sig.current.rate;
  meta["source_id"] = sig.source_id;
  auto meta_out = open_out(fs::path(sig_file.string() + ".meta"), std::ios::out);
  meta_out << meta.dump(2) << "\n";
}

signal::Signature read_signature(const fs::path& sig_file) {
  const fs::path meta_file(sig_file.string() + ".meta");
  auto meta_in = open_in(meta_file, std::ios::in);
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw DataError("bad signature metadata " + meta_file.string() + ": " + e.what());
  }

  signal::Signature sig;
  sig.label = meta.at("label").get<std::string>();
  sig.source_id = meta.at("source_id").get<std::string>();
  const double rate = meta.at("rate").get<double>();
  sig.current.rate = rate;
  sig.voltage.rate = rate;

  auto in = open_in(sig_file);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % 8 != 0)
    throw DataError("signature file not a whole number of (i,v) pairs: " + sig_file.string());
  const std::size_t n = bytes / 8;
  sig.current.samples.resize(n);
  sig.voltage.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sig.current.samples[i] = static_cast<double>(read_f32(in));
    sig.voltage.samples[i] = static_cast<double>(read_f32(in));
  }
  signal::validate_signature(sig, /*check_finite=*/true);
  return sig;
}

std::vector<fs::path> list_signature_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".sig")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

sns::PatternMap read_signature_dir(const fs::path& dir) {
  sns::PatternMap patterns;
  for (const auto& file : list_signature_files(dir)) {
    auto sig = std::make_shared<signal::Signature>(read_signature(file));
    patterns[sig->label].push_back(std::move(sig));
  }
  if (patterns.empty()) throw DataError("no signatures found in " + dir.string());
  return patterns;
}

// --- Datasets ----------------------------------------------------------------

DatasetWriter::DatasetWriter(const fs::path& base, double t_obs, double f_down,
                             const std::vector<std::string>& universe,
                             std::uint64_t config_hash)
    : base_(base),
      t_obs_(t_obs),
      f_down_(f_down),
      universe_(universe),
      config_hash_(config_hash),
      record_len_(static_cast<std::size_t>(std::llround(t_obs * f_down))) {
  fs::create_directories(base.parent_path().empty() ? "." : base.parent_path());
  bin_ = open_out(fs::path(base.string() + ".bin"));
  manifest_ = open_out(fs::path(base.string() + ".manifest"), std::ios::out);
  manifest_ << "# config_hash=" << config_hash_ << "\n";
  manifest_ << "# t_obs=" << t_obs_ << " f_down=" << f_down_ << "\n";
  manifest_ << "# labels=" << join(universe_, ',') << "\n";
  manifest_ << "# columns=id\tw\tlabels\toffsets\tshifts\tsources\n";
}

void DatasetWriter::add(const sns::AggregateExample& example) {
  if (example.current.size() != record_len_)
    throw DataError("dataset writer: record length mismatch");
  write_f32_block(bin_, example.current.samples.data(), record_len_);

  std::vector<std::string> labels, sources;
  std::vector<std::int64_t> offsets, shifts;
  for (const auto& p : example.placements) {
    labels.push_back(p.label);
    sources.push_back(p.source_id);
    offsets.push_back(p.start_offset);
    shifts.push_back(p.phase_shift);
  }
  manifest_ << example.id << '\t' << example.w << '\t' << join(labels, ',') << '\t'
            << join_num(offsets, ',') << '\t' << join_num(shifts, ',') << '\t'
            << join(sources, ',') << "\n";
  ++count_;
}

void DatasetWriter::finish(const sns::SynthesisManifest& manifest) {
  bin_.close();
  manifest_.close();

  json summary;
  summary["config_hash"] = config_hash_;
  summary["seed"] = manifest.seed;
  summary["t_obs"] = t_obs_;
  summary["f_down"] = f_down_;
  summary["labels"] = universe_;
  summary["count"] = count_;
  json counts = json::object();
  for (const auto& [w, c] : manifest.counts) counts[std::to_string(w)] = c;
  summary["counts_per_w"] = counts;
  json combos = json::object();
  for (const auto& [w, c] : manifest.combos) combos[std::to_string(w)] = c;
  summary["combos_per_w"] = combos;
  json truncations = json::array();
  for (const auto& t : manifest.truncations) {
    truncations.push_back({{"w", t.w},
                           {"combo_index", t.combo_index},
                           {"requested", t.requested},
                           {"available", t.available}});
  }
  summary["truncations"] = truncations;
  auto out = open_out(fs::path(base_.string() + ".summary.json"), std::ios::out);
  out << summary.dump(2) << "\n";
}

DatasetReader::DatasetReader(const fs::path& base) : base_(base) {
  auto in = open_in(fs::path(base.string() + ".summary.json"), std::ios::in);
  json summary;
  try {
    in >> summary;
  } catch (const json::exception& e) {
    throw DataError("bad dataset summary for " + base.string() + ": " + e.what());
  }
  config_hash_ = summary.at("config_hash").get<std::uint64_t>();
  t_obs_ = summary.at("t_obs").get<double>();
  f_down_ = summary.at("f_down").get<double>();
  count_ = summary.at("count").get<std::int64_t>();
  universe_ = summary.at("labels").get<std::vector<std::string>>();
  record_len_ = static_cast<std::size_t>(std::llround(t_obs_ * f_down_));

  // Parse the manifest rows for w and label sets.
  auto manifest = open_in(fs::path(base.string() + ".manifest"), std::ios::in);
  std::string line;
  std::map<std::string, std::size_t> label_index;
  for (std::size_t i = 0; i < universe_.size(); ++i) label_index[universe_[i]] = i;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string id_str, w_str, labels_str;
    std::getline(row, id_str, '\t');
    std::getline(row, w_str, '\t');
    std::getline(row, labels_str, '\t');
    w_.push_back(std::stoi(w_str));
    std::vector<std::uint8_t> hot(universe_.size(), 0);
    std::istringstream labels_stream(labels_str);
    std::string label;
    while (std::getline(labels_stream, label, ',')) {
      const auto it = label_index.find(label);
      if (it == label_index.end())
        throw DataError("dataset manifest references unknown label '" + label + "'");
      hot[it->second] = 1;
    }
    labels_.push_back(std::move(hot));
  }
  if (static_cast<std::int64_t>(w_.size()) != count_)
    throw DataError("dataset manifest row count disagrees with summary for " + base.string());

  bin_ = open_in(fs::path(base.string() + ".bin"));
}

DatasetRecord DatasetReader::read(std::int64_t index) {
  if (index < 0 || index >= count_)
    throw DataError("dataset reader: index out of range");
  DatasetRecord rec;
  rec.id = static_cast<std::uint64_t>(index);
  rec.w = w_[static_cast<std::size_t>(index)];
  rec.labels = labels_[static_cast<std::size_t>(index)];
  rec.current.rate = f_down_;
  rec.current.samples.resize(record_len_);
  bin_.seekg(static_cast<std::streamoff>(index) *
             static_cast<std::streamoff>(record_len_ * sizeof(float)));
  read_f32_block(bin_, rec.current.samples.data(), record_len_);
  return rec;
}

// --- Feature cache -------------------------------------------------------------

FeatureCacheWriter::FeatureCacheWriter(const fs::path& file, int t, int v,
                                       features::Scale scale, int n_labels,
                                       std::uint64_t config_hash)
    : file_(file) {
  header_ = FeatureCacheHeader{t, v, scale, n_labels, config_hash, 0};
  out_ = open_out(file);
  write_u32(out_, kFeatureMagic);
  write_u32(out_, static_cast<std::uint32_t>(t));
  write_u32(out_, static_cast<std::uint32_t>(v));
  write_u32(out_, static_cast<std::uint32_t>(scale));
  write_u32(out_, static_cast<std::uint32_t>(n_labels));
  write_u64(out_, config_hash);
  write_u64(out_, 0);  // count, patched in finish()
}

void FeatureCacheWriter::add(const features::Spectrogram& spec, int w,
                             const std::vector<std::uint8_t>& labels) {
  if (spec.t() != header_.t || spec.v() != header_.v)
    throw ShapeMismatchError("feature cache: spectrogram shape mismatch");
  if (static_cast<int>(labels.size()) != header_.n_labels)
    throw ShapeMismatchError("feature cache: label vector length mismatch");
  write_u32(out_, static_cast<std::uint32_t>(w));
  out_.write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size()));
  // Row-major frames: frame-by-frame, bin within frame.
  std::vector<double> row(static_cast<std::size_t>(header_.v));
  for (int f = 0; f < header_.t; ++f) {
    for (int b = 0; b < header_.v; ++b) row[static_cast<std::size_t>(b)] = spec.data(f, b);
    write_f32_block(out_, row.data(), row.size());
  }
  ++header_.count;
}

// Header layout: magic,t,v,scale,n_labels (5 x u32), config_hash (u64),
// count (u64) -> records start at byte 36.
constexpr std::streamoff kFeatureCountOffset = 28;
constexpr std::streamoff kFeatureRecordsOffset = 36;

void FeatureCacheWriter::finish() {
  out_.seekp(kFeatureCountOffset);
  write_u64(out_, static_cast<std::uint64_t>(header_.count));
  out_.close();
}

FeatureCacheHeader read_feature_cache_header(const fs::path& file) {
  auto in = open_in(file);
  if (read_u32(in) != kFeatureMagic)
    throw DataError("not a feature cache: " + file.string());
  FeatureCacheHeader h;
  h.t = static_cast<int>(read_u32(in));
  h.v = static_cast<int>(read_u32(in));
  h.scale = static_cast<features::Scale>(read_u32(in));
  h.n_labels = static_cast<int>(read_u32(in));
  h.config_hash = read_u64(in);
  h.count = static_cast<std::int64_t>(read_u64(in));
  return h;
}

train::FeatureDataset read_feature_cache(const fs::path& file, std::uint64_t expected_hash) {
  const auto header = read_feature_cache_header(file);
  if (expected_hash != 0 && header.config_hash != expected_hash)
    throw DataError("feature cache " + file.string() +
                    " was built from a different configuration (hash mismatch)");
  auto in = open_in(file);
  in.seekg(kFeatureRecordsOffset);

  train::FeatureDataset data;
  std::vector<double> row(static_cast<std::size_t>(header.v));
  for (std::int64_t e = 0; e < header.count; ++e) {
    const int w = static_cast<int>(read_u32(in));
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(header.n_labels));
    in.read(reinterpret_cast<char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
    if (!in) throw DataError("feature cache truncated: " + file.string());
    cold::Mat x(header.t, header.v);
    for (int f = 0; f < header.t; ++f) {
      read_f32_block(in, row.data(), row.size());
      for (int b = 0; b < header.v; ++b) x(f, b) = row[static_cast<std::size_t>(b)];
    }
    data.x.push_back(std::move(x));
    data.y.push_back(std::move(labels));
    data.w.push_back(w);
  }
  return data;
}

void write_feature_stats(const fs::path& file, const features::FeatureStats& stats) {
  auto out = open_out(file);
  write_u32(out, kStatsMagic);
  write_u32(out, static_cast<std::uint32_t>(stats.mean.size()));
  write_u64(out, stats.config_hash);
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i) write_f64(out, stats.mean[i]);
  for (Eigen::Index i = 0; i < stats.stddev.size(); ++i) write_f64(out, stats.stddev[i]);
}

features::FeatureStats read_feature_stats(const fs::path& file) {
  auto in = open_in(file);
  if (read_u32(in) != kStatsMagic) throw DataError("not a feature stats file: " + file.string());
  const auto v = static_cast<Eigen::Index>(read_u32(in));
  features::FeatureStats stats;
  stats.config_hash = read_u64(in);
  stats.mean.resize(v);
  stats.stddev.resize(v);
  for (Eigen::Index i = 0; i < v; ++i) stats.mean[i] = read_f64(in);
  for (Eigen::Index i = 0; i < v; ++i) stats.stddev[i] = read_f64(in);
  return stats;
}

// --- Checkpoints ------------------------------------------------------------------

namespace {

void write_checkpoint_stream(std::ostream& out, const cold::ColdParams& params,
                             std::uint64_t seed, std::uint64_t config_hash) {
  const auto& hp = params.hp;
  write_u32(out, kCheckpointMagic);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(hp.q));
  write_u32(out, static_cast<std::uint32_t>(hp.k));
  write_u32(out, static_cast<std::uint32_t>(hp.n_head));
  write_u32(out, static_cast<std::uint32_t>(hp.n_labels));
  write_u32(out, static_cast<std::uint32_t>(hp.v_in));
  write_f64(out, hp.p_d);
  write_u64(out, seed);
  write_u64(out, config_hash);
  for (const auto& view : cold::tensor_views(params))
    write_f32_block(out, view.data(), static_cast<std::size_t>(view.size()));
}

}  // namespace

void write_checkpoint(const fs::path& file, const cold::ColdParams& params, std::uint64_t seed,
                      std::uint64_t config_hash) {
  auto out = open_out(file);
  write_checkpoint_stream(out, params, seed, config_hash);
}

std::vector<char> checkpoint_bytes(const cold::ColdParams& params, std::uint64_t seed,
                                   std::uint64_t config_hash) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint_stream(out, params, seed, config_hash);
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

cold::ColdParams read_checkpoint(const fs::path& file, std::uint64_t* seed,
                                 std::uint64_t* config_hash) {
  auto in = open_in(file);
  if (read_u32(in) != kCheckpointMagic) throw DataError("not a checkpoint: " + file.string());
  const auto version = read_u32(in);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version in " + file.string());
  cold::ColdHyperParams hp;
  hp.q = static_cast<int>(read_u32(in));
  hp.k = static_cast<int>(read_u32(in));
  hp.n_head = static_cast<int>(read_u32(in));
  hp.n_labels = static_cast<int>(read_u32(in));
  hp.v_in = static_cast<int>(read_u32(in));
  hp.p_d = read_f64(in);
  const std::uint64_t s = read_u64(in);
  const std::uint64_t h = read_u64(in);
  if (seed) *seed = s;
  if (config_hash) *config_hash = h;

  cold::ColdParams params = cold::init_params(hp, 0);
  for (auto& view : cold::tensor_views(params))
    read_f32_block(in, view.data(), static_cast<std::size_t>(view.size()));
  return params;
}

// --- Text artifacts -----------------------------------------------------------------

void write_training_curve(const fs::path& file, const std::vector<train::CurvePoint>& curve) {
  auto out = open_out(file, std::ios::out);
  out << "step\tloss\tval_weighted_mf1\n";
  for (const auto& p : curve) {
    out << p.step << '\t' << p.loss << '\t';
    if (p.has_val)
      out << p.val_mf1;
    out << "\n";
  }
}

void write_eval_report(const fs::path& json_file, const train::EvalReport& report,
                       const std::vector<std::string>& universe, std::uint64_t config_hash) {
  json j;
  j["config_hash"] = config_hash;
  j["threshold"] = report.threshold;
  j["weighted_mf1"] = report.weighted_mf1;
  json per_w = json::object();
  for (const auto& [w, score] : report.per_w)
    per_w[std::to_string(w)] = {{"count", score.count}, {"mean_f1", score.mean_f1}};
  j["per_w"] = per_w;
  json per_label = json::object();
  for (std::size_t i = 0; i < report.per_label_f1.size(); ++i) {
    const std::string name = i < universe.size() ? universe[i] : std::to_string(i);
    per_label[name] = report.per_label_f1[i];
  }
  j["per_label_f1"] = per_label;
  auto out = open_out(json_file, std::ios::out);
  out << j.dump(2) << "\n";
}

}  // namespace nilm::io

#include "nilm/train/asha.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "nilm/errors.hpp"

namespace nilm::train {

void AshaConfig::validate() const {
  if (min_resource < 1) throw ConfigError("asha: min_resource must be >= 1");
  if (max_resource < min_resource) throw ConfigError("asha: max_resource below min_resource");
  if (reduction_factor < 2) throw ConfigError("asha: reduction factor must be >= 2");
  if (n_trials < reduction_factor) throw ConfigError("asha: n_trials below reduction factor");
  if (n_workers < 1) throw ConfigError("asha: n_workers must be >= 1");
}

namespace {

struct RunningJob {
  double finish_time = 0.0;
  std::uint64_t sequence = 0;  // tiebreak: submission order
  int trial_id = 0;
  int rung = 0;

  bool operator>(const RunningJob& other) const {
    if (finish_time != other.finish_time) return finish_time > other.finish_time;
    return sequence > other.sequence;
  }
};

}  // namespace

AshaResult asha_search(const AshaConfig& cfg, const TrialObjective& objective) {
  cfg.validate();

  // Rung resources: min * eta^i, capped at (and always ending with) max.
  std::vector<int> rungs;
  for (long long r = cfg.min_resource; r < cfg.max_resource; r *= cfg.reduction_factor)
    rungs.push_back(static_cast<int>(r));
  rungs.push_back(cfg.max_resource);
  const int top = static_cast<int>(rungs.size()) - 1;

  // scores[i]: (score, trial) recorded at rung i, kept sorted descending.
  std::vector<std::vector<std::pair<double, int>>> scores(rungs.size());
  std::vector<std::set<int>> promoted(rungs.size());
  std::vector<std::int64_t> promotions(rungs.size(), 0);

  std::vector<TrialRecord> table(static_cast<std::size_t>(cfg.n_trials));
  for (int i = 0; i < cfg.n_trials; ++i) table[static_cast<std::size_t>(i)].trial_id = i;

  std::priority_queue<RunningJob, std::vector<RunningJob>, std::greater<RunningJob>> running;
  std::uint64_t sequence = 0;
  int next_trial = 0;
  double now = 0.0;

  // Scan rungs top-down for a promotable trial; otherwise start a new one.
  const auto next_job = [&]() -> std::pair<int, int> {
    for (int i = top - 1; i >= 0; --i) {
      const auto quota = static_cast<std::int64_t>(scores[static_cast<std::size_t>(i)].size()) /
                         cfg.reduction_factor;
      const auto& rung_scores = scores[static_cast<std::size_t>(i)];
      for (std::int64_t rank = 0; rank < quota; ++rank) {
        const int candidate = rung_scores[static_cast<std::size_t>(rank)].second;
        if (!promoted[static_cast<std::size_t>(i)].count(candidate))
          return {candidate, i + 1};
      }
    }
    if (next_trial < cfg.n_trials) return {next_trial++, 0};
    return {-1, -1};
  };

  const auto submit = [&](int trial, int rung) {
    const int prev = rung == 0 ? 0 : rungs[static_cast<std::size_t>(rung - 1)];
    const double duration = static_cast<double>(rungs[static_cast<std::size_t>(rung)] - prev);
    if (rung > 0) {
      promoted[static_cast<std::size_t>(rung - 1)].insert(trial);
      ++promotions[static_cast<std::size_t>(rung - 1)];
    }
    running.push(RunningJob{now + duration, sequence++, trial, rung});
  };

  for (int w = 0; w < cfg.n_workers; ++w) {
    const auto [trial, rung] = next_job();
    if (trial < 0) break;
    submit(trial, rung);
  }

  while (!running.empty()) {
    const RunningJob job = running.top();
    running.pop();
    now = job.finish_time;

    const double score = objective(job.trial_id, rungs[static_cast<std::size_t>(job.rung)]);
    auto& rung_scores = scores[static_cast<std::size_t>(job.rung)];
    // Insertion keeps descending score order; ties resolve to the earlier
    // trial id so the schedule is deterministic.
    const auto pos = std::upper_bound(
        rung_scores.begin(), rung_scores.end(), std::make_pair(score, job.trial_id),
        [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
    rung_scores.insert(pos, {score, job.trial_id});

    auto& record = table[static_cast<std::size_t>(job.trial_id)];
    if (job.rung >= record.rung_reached) {
      record.rung_reached = job.rung;
      record.resource = rungs[static_cast<std::size_t>(job.rung)];
      record.score = score;
    }

    // The freed worker immediately asks for work.
    const auto [trial, rung] = next_job();
    if (trial >= 0) submit(trial, rung);
  }

  AshaResult result;
  result.rung_resources = rungs;
  result.table = table;
  for (std::size_t i = 0; i < rungs.size(); ++i) {
    result.completed_per_rung.push_back(static_cast<std::int64_t>(scores[i].size()));
    result.promoted_per_rung.push_back(promotions[i]);
  }
  // Best trial: highest score at the deepest rung reached by anyone.
  int deepest = 0;
  for (const auto& rec : table) deepest = std::max(deepest, rec.rung_reached);
  for (const auto& rec : table) {
    if (rec.rung_reached != deepest) continue;
    if (result.best_trial < 0 || rec.score > result.best_score) {
      result.best_trial = rec.trial_id;
      result.best_score = rec.score;
    }
  }
  return result;
}

}  // namespace nilm::train

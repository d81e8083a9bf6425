#include "nilm/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nilm/errors.hpp"

namespace nilm::train {

namespace {

double f1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, bool literal) {
  if (tp + fp + fn == 0) return 1.0;  // nothing to find, nothing claimed
  const auto denom = static_cast<double>(2 * tp + fp + fn);
  if (denom == 0.0) return 0.0;
  // 2*PR*RE/(PR+RE) = 2tp/(2tp+fp+fn); the literal PR*RE/(PR+RE) halves it.
  return literal ? static_cast<double>(tp) / denom : 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace

double f1_example(const std::vector<std::uint8_t>& y, const std::vector<std::uint8_t>& y_pred,
                  bool literal) {
  if (y.size() != y_pred.size())
    throw ShapeMismatchError("f1_example: label vector length mismatch");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool truth = y[i] != 0;
    const bool pred = y_pred[i] != 0;
    if (truth && pred) ++tp;
    else if (!truth && pred) ++fp;
    else if (truth && !pred) ++fn;
  }
  return f1_from_counts(tp, fp, fn, literal);
}

double mean_f1(const std::vector<double>& per_example_f1) {
  if (per_example_f1.empty()) throw EmptySubsetError("mean_f1: empty subset");
  return std::accumulate(per_example_f1.begin(), per_example_f1.end(), 0.0) /
         static_cast<double>(per_example_f1.size());
}

double weighted_mf1(const std::map<int, SubsetScore>& per_w) {
  std::int64_t total = 0;
  for (const auto& [w, score] : per_w) total += score.count;
  if (total == 0) throw EmptySubsetError("weighted_mf1: no examples");
  double result = 0.0;
  for (const auto& [w, score] : per_w)
    result += (static_cast<double>(score.count) / static_cast<double>(total)) * score.mean_f1;
  return result;
}

ThresholdResult tune_threshold(const std::vector<std::vector<double>>& probabilities,
                               const std::vector<std::vector<std::uint8_t>>& targets,
                               const std::vector<int>& w_of_example, double step,
                               bool literal) {
  const std::size_t n = probabilities.size();
  if (n == 0) throw EmptySubsetError("tune_threshold: no examples");
  if (targets.size() != n || w_of_example.size() != n)
    throw ShapeMismatchError("tune_threshold: input length mismatch");
  if (step <= 0.0 || step >= 1.0) throw std::invalid_argument("tune_threshold: bad grid step");

  // Per-example confusion counts at threshold 0+ (everything predicted on),
  // then a sweep: crossing a probability flips exactly one prediction off.
  struct Counts {
    std::int64_t tp = 0, fp = 0, fn = 0;
  };
  std::vector<Counts> counts(n);
  struct Event {
    double prob;
    std::uint32_t example;
    std::uint8_t positive;
  };
  std::vector<Event> events;
  double total_f1 = 0.0;  // weighted mF1 * N == sum of per-example F1
  for (std::size_t e = 0; e < n; ++e) {
    if (probabilities[e].size() != targets[e].size())
      throw ShapeMismatchError("tune_threshold: probability/target length mismatch");
    for (std::size_t l = 0; l < probabilities[e].size(); ++l) {
      const bool pos = targets[e][l] != 0;
      if (pos) ++counts[e].tp;
      else ++counts[e].fp;
      events.push_back(
          Event{probabilities[e][l], static_cast<std::uint32_t>(e), pos ? std::uint8_t{1} : std::uint8_t{0}});
    }
    total_f1 += f1_from_counts(counts[e].tp, counts[e].fp, counts[e].fn, literal);
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.prob != b.prob) return a.prob < b.prob;
    if (a.example != b.example) return a.example < b.example;
    return a.positive < b.positive;
  });

  ThresholdResult best{0.0, -1.0};
  std::size_t next_event = 0;
  const auto n_steps = static_cast<std::int64_t>(std::floor((1.0 - 1e-12) / step));
  for (std::int64_t j = 1; j <= n_steps; ++j) {
    const double threshold = static_cast<double>(j) * step;
    // Prediction rule is prob > threshold: flip every label whose
    // probability is now at or below it.
    while (next_event < events.size() && events[next_event].prob <= threshold) {
      const auto& ev = events[next_event];
      auto& c = counts[ev.example];
      total_f1 -= f1_from_counts(c.tp, c.fp, c.fn, literal);
      if (ev.positive) {
        --c.tp;
        ++c.fn;
      } else {
        --c.fp;
      }
      total_f1 += f1_from_counts(c.tp, c.fp, c.fn, literal);
      ++next_event;
    }
    const double metric = total_f1 / static_cast<double>(n);
    if (metric > best.weighted_mf1 + 1e-15) {
      best.weighted_mf1 = metric;
      best.threshold = threshold;
    }
  }
  return best;
}

EvalReport evaluate_predictions(const std::vector<std::vector<double>>& probabilities,
                                const std::vector<std::vector<std::uint8_t>>& targets,
                                const std::vector<int>& w_of_example, double threshold,
                                bool literal) {
  const std::size_t n = probabilities.size();
  if (n == 0) throw EmptySubsetError("evaluate_predictions: no examples");
  if (targets.size() != n || w_of_example.size() != n)
    throw ShapeMismatchError("evaluate_predictions: input length mismatch");

  EvalReport report;
  report.threshold = threshold;
  std::map<int, std::vector<double>> f1_per_w;

  const std::size_t n_labels = targets.front().size();
  std::vector<std::int64_t> label_tp(n_labels, 0), label_fp(n_labels, 0), label_fn(n_labels, 0);

  std::vector<std::uint8_t> pred(n_labels);
  for (std::size_t e = 0; e < n; ++e) {
    if (probabilities[e].size() != n_labels || targets[e].size() != n_labels)
      throw ShapeMismatchError("evaluate_predictions: ragged inputs");
    for (std::size_t l = 0; l < n_labels; ++l) {
      pred[l] = probabilities[e][l] > threshold ? 1 : 0;
      const bool truth = targets[e][l] != 0;
      if (truth && pred[l]) ++label_tp[l];
      else if (!truth && pred[l]) ++label_fp[l];
      else if (truth && !pred[l]) ++label_fn[l];
    }
    f1_per_w[w_of_example[e]].push_back(f1_example(targets[e], pred, literal));
  }

  for (const auto& [w, scores] : f1_per_w) {
    SubsetScore s;
    s.count = static_cast<std::int64_t>(scores.size());
    s.mean_f1 = mean_f1(scores);
    report.per_w[w] = s;
    report.counts[w] = s.count;
  }
  report.weighted_mf1 = weighted_mf1(report.per_w);

  report.per_label_f1.resize(n_labels, 1.0);
  for (std::size_t l = 0; l < n_labels; ++l)
    report.per_label_f1[l] = f1_from_counts(label_tp[l], label_fp[l], label_fn[l], literal);
  return report;
}

}  // namespace nilm::train

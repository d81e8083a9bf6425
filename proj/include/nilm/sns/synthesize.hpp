#pragma once

#include <array>
#include <functional>

#include "nilm/sns/types.hpp"
#include "nilm/util/rng.hpp"

namespace nilm::sns {

// Per-label seeded shuffle and largest-remainder split, leak-free by
// construction.
BaselineSplit split_baseline(const PatternMap& patterns, std::array<double, 3> fractions,
                             std::uint64_t seed);

// binomial(n_labels, w), saturating at int64 max.
std::int64_t count_combinations(int n_labels, int w);

// min(C(|labels|, w), b_comb_hat) distinct label sets, each drawn by sampling
// w labels without replacement proportionally to pr; duplicates rejected and
// redrawn. Deterministic in `seed`; returned in draw order, each set sorted.
std::vector<LabelSet> sample_combinations(const std::vector<std::string>& labels, int w,
                                          std::int64_t b_comb_hat,
                                          const std::map<std::string, double>& pr,
                                          std::uint64_t seed);

// Omega = prod_{l in combo} pr(l) / sum_{l in L} pr(l), implemented literally.
double combination_weight(const LabelSet& combo, const std::map<std::string, double>& pr);

// Number of unique aggregated signals to draw for one combination.
std::int64_t allocate_representations(const LabelSet& combo, const PatternMap& patterns,
                                      std::int64_t b_repr_hat, AllocationMode mode,
                                      std::int64_t n_combinations,
                                      const std::map<std::string, double>& pr);

// `count` distinct tuples of per-label signature indices (combo order).
// Throws ExhaustedError when count exceeds prod|P_l|.
std::vector<std::vector<int>> sample_representation(const LabelSet& combo,
                                                    const PatternMap& patterns,
                                                    std::int64_t count, util::Rng& rng);

// Uniform start offset keeping at least margin = max(one period, 5% of the
// window) samples of overlap with the window.
std::int64_t place_in_window(std::int64_t sig_len, std::int64_t window_len,
                             std::int64_t period_samples, util::Rng& rng);

// Circular phase shifts aligning every voltage with the first (the
// reference); shifts lie in [0, period).
std::vector<std::int64_t> phase_align(
    const std::vector<std::shared_ptr<const signal::Signature>>& sigs,
    std::int64_t period_samples);

struct PlacedComponent {
  std::shared_ptr<const signal::Signature> signature;
  std::int64_t start_offset = 0;
  std::int64_t phase_shift = 0;
};

// Point-wise sum of the placed, shifted component currents over the window,
// zero outside each signature's support. Summation order = component order.
AggregateExample aggregate(const std::vector<PlacedComponent>& components, double t_obs,
                           double f_down, const std::vector<std::string>& universe,
                           std::uint64_t id);

using ExampleSink = std::function<void(AggregateExample&&)>;

// SNS: P -> S. Deterministic in schedule.seed regardless of thread count;
// examples are emitted in (schedule entry, combination, tuple) order.
SynthesisManifest synthesize_collection(const PatternMap& patterns,
                                        const SynthesisSchedule& schedule, double f_ref,
                                        double f_down, int threads, const ExampleSink& sink);

}  // namespace nilm::sns

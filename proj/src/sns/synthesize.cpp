#include "nilm/sns/synthesize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "nilm/errors.hpp"
#include "nilm/util/hash.hpp"
#include "nilm/util/parallel.hpp"

namespace nilm::sns {

namespace {

constexpr std::int64_t kSaturated = std::numeric_limits<std::int64_t>::max();

std::int64_t saturating_mul(std::int64_t a, std::int64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

const std::vector<std::shared_ptr<const signal::Signature>>& patterns_for(
    const PatternMap& patterns, const std::string& label) {
  const auto it = patterns.find(label);
  if (it == patterns.end() || it->second.empty())
    throw DataError("sns: no patterns for label '" + label + "'");
  return it->second;
}

std::int64_t capacity_of(const LabelSet& combo, const PatternMap& patterns) {
  std::int64_t cap = 1;
  for (const auto& label : combo)
    cap = saturating_mul(cap, static_cast<std::int64_t>(patterns_for(patterns, label).size()));
  return cap;
}

std::map<std::string, double> uniform_distribution(const std::vector<std::string>& labels) {
  std::map<std::string, double> pr;
  for (const auto& l : labels) pr[l] = 1.0 / static_cast<double>(labels.size());
  return pr;
}

}  // namespace

void SynthesisSchedule::validate() const {
  if (entries.empty()) throw ConfigError("schedule: no entries");
  std::set<int> seen;
  for (const auto& e : entries) {
    if (e.w < 1) throw ConfigError("schedule: w must be >= 1");
    if (!seen.insert(e.w).second) throw ConfigError("schedule: duplicate w entry");
    if (e.b_comb_hat < 1) throw ConfigError("schedule: b_comb_hat must be >= 1");
  }
  if (t_obs <= 0.0) throw ConfigError("schedule: t_obs must be positive");
  if (!label_distribution.empty()) {
    double total = 0.0;
    for (const auto& [label, p] : label_distribution) {
      if (p < 0.0) throw ConfigError("schedule: negative probability for '" + label + "'");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError("schedule: label distribution must sum to 1");
  }
}

BaselineSplit split_baseline(const PatternMap& patterns, std::array<double, 3> fractions,
                             std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split_baseline: fractions must sum to 1");

  BaselineSplit split;
  for (const auto& [label, sigs] : patterns) {
    if (sigs.empty()) throw DataError("split_baseline: label '" + label + "' has no patterns");
    const std::size_t n = sigs.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    util::Rng rng(util::mix_seed(seed, util::fnv1a64(label)));
    rng.shuffle(order);

    // Largest-remainder rounding of the per-split counts.
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
      const double exact = fractions[i] * static_cast<double>(n);
      counts[i] = static_cast<std::size_t>(std::floor(exact));
      remainders[i] = exact - std::floor(exact);
      assigned += counts[i];
    }
    std::array<int, 3> by_remainder{0, 1, 2};
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (std::size_t leftover = n - assigned, i = 0; i < leftover; ++i)
      ++counts[by_remainder[i % 3]];

    std::size_t pos = 0;
    PatternMap* dests[3] = {&split.train, &split.val, &split.test};
    for (int i = 0; i < 3; ++i) {
      auto& bucket = (*dests[i])[label];
      for (std::size_t j = 0; j < counts[i]; ++j) bucket.push_back(sigs[order[pos++]]);
    }
    // Empty buckets still get the label key removed for cleanliness.
    for (auto* dest : dests)
      if (dest->count(label) && (*dest)[label].empty()) dest->erase(label);
  }
  return split;
}

std::int64_t count_combinations(int n_labels, int w) {
  if (w < 1 || w > n_labels)
    throw std::invalid_argument("count_combinations: w out of range");
  // C(n, w) with early saturation.
  std::int64_t result = 1;
  const int k = std::min(w, n_labels - w);
  for (int i = 1; i <= k; ++i) {
    const double projected =
        static_cast<double>(result) * (n_labels - k + i) / static_cast<double>(i);
    if (projected > 4.0e18) return kSaturated;
    result = result * (n_labels - k + i) / i;
  }
  return result;
}

std::vector<LabelSet> sample_combinations(const std::vector<std::string>& labels, int w,
                                          std::int64_t b_comb_hat,
                                          const std::map<std::string, double>& pr,
                                          std::uint64_t seed) {
  std::vector<std::string> active;
  std::vector<double> weights;
  for (const auto& l : labels) {
    const auto it = pr.find(l);
    if (it == pr.end()) throw ConfigError("sample_combinations: label '" + l + "' not in Pr(L)");
    if (it->second > 0.0) {
      active.push_back(l);
      weights.push_back(it->second);
    }
  }
  const int n = static_cast<int>(active.size());
  if (w > n) throw std::invalid_argument("sample_combinations: w exceeds usable label count");

  const std::int64_t target = std::min(count_combinations(n, w), b_comb_hat);
  std::vector<LabelSet> result;
  std::set<LabelSet> seen;
  util::Rng rng(seed);

  std::vector<int> chosen(static_cast<std::size_t>(w));
  std::vector<double> live(weights.size());
  const std::int64_t max_attempts = std::max<std::int64_t>(100000, 1000 * target);
  for (std::int64_t attempts = 0; static_cast<std::int64_t>(result.size()) < target;
       ++attempts) {
    if (attempts > max_attempts)
      throw std::logic_error("sample_combinations: rejection sampling failed to converge");
    live = weights;
    for (int j = 0; j < w; ++j) {
      double total = std::accumulate(live.begin(), live.end(), 0.0);
      double r = rng.uniform() * total;
      int pick = -1;
      for (std::size_t i = 0; i < live.size(); ++i) {
        r -= live[i];
        if (r <= 0.0 && live[i] > 0.0) {
          pick = static_cast<int>(i);
          break;
        }
      }
      if (pick < 0) {  // numerical tail: take the last live label
        for (int i = n - 1; i >= 0; --i)
          if (live[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
      }
      chosen[static_cast<std::size_t>(j)] = pick;
      live[static_cast<std::size_t>(pick)] = 0.0;
    }
    LabelSet combo;
    combo.reserve(static_cast<std::size_t>(w));
    for (const int idx : chosen) combo.push_back(active[static_cast<std::size_t>(idx)]);
    std::sort(combo.begin(), combo.end());
    if (seen.insert(combo).second) result.push_back(std::move(combo));
  }
  return result;
}

double combination_weight(const LabelSet& combo, const std::map<std::string, double>& pr) {
  double numerator = 1.0;
  for (const auto& label : combo) {
    const auto it = pr.find(label);
    if (it == pr.end())
      throw ConfigError("combination_weight: label '" + label + "' not in Pr(L)");
    numerator *= it->second;
  }
  double denominator = 0.0;
  for (const auto& [label, p] : pr) denominator += p;
  if (denominator <= 0.0) throw ConfigError("combination_weight: Pr(L) sums to zero");
  return numerator / denominator;
}

std::int64_t allocate_representations(const LabelSet& combo, const PatternMap& patterns,
                                      std::int64_t b_repr_hat, AllocationMode mode,
                                      std::int64_t n_combinations,
                                      const std::map<std::string, double>& pr) {
  const std::int64_t capacity = capacity_of(combo, patterns);
  if (b_repr_hat <= 0) return capacity;  // unbounded rows ("-")
  if (mode == AllocationMode::LiteralOmega) {
    const double omega = combination_weight(combo, pr);
    const double bound =
        std::min(omega * static_cast<double>(capacity), static_cast<double>(b_repr_hat));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bound)));
  }
  if (n_combinations < 1)
    throw std::invalid_argument("allocate_representations: n_combinations must be >= 1");
  const std::int64_t budget = std::max<std::int64_t>(
      1, std::llround(static_cast<double>(b_repr_hat) / static_cast<double>(n_combinations)));
  return std::min(capacity, budget);
}

std::vector<std::vector<int>> sample_representation(const LabelSet& combo,
                                                    const PatternMap& patterns,
                                                    std::int64_t count, util::Rng& rng) {
  const std::int64_t capacity = capacity_of(combo, patterns);
  if (count > capacity) {
    std::ostringstream msg;
    msg << "sample_representation: " << count << " unique tuples requested but only "
        << capacity << " exist";
    throw ExhaustedError(msg.str());
  }
  std::vector<std::size_t> sizes;
  sizes.reserve(combo.size());
  for (const auto& label : combo) sizes.push_back(patterns_for(patterns, label).size());

  std::vector<std::vector<int>> result;
  std::set<std::vector<int>> seen;
  std::vector<int> tuple(combo.size());
  const std::int64_t max_attempts = std::max<std::int64_t>(100000, 1000 * count);
  for (std::int64_t attempts = 0; static_cast<std::int64_t>(result.size()) < count;
       ++attempts) {
    if (attempts > max_attempts)
      throw std::logic_error("sample_representation: rejection sampling failed to converge");
    for (std::size_t i = 0; i < sizes.size(); ++i)
      tuple[i] = static_cast<int>(rng.below(sizes[i]));
    if (seen.insert(tuple).second) result.push_back(tuple);
  }
  return result;
}

std::int64_t place_in_window(std::int64_t sig_len, std::int64_t window_len,
                             std::int64_t period_samples, util::Rng& rng) {
  const std::int64_t margin =
      std::max(period_samples, std::llround(0.05 * static_cast<double>(window_len)));
  if (sig_len < margin || window_len < margin)
    throw std::invalid_argument("place_in_window: signature or window shorter than margin");
  const std::int64_t lo = -(sig_len - margin);
  const std::int64_t hi = window_len - margin;
  return rng.range(lo, hi);
}

std::vector<std::int64_t> phase_align(
    const std::vector<std::shared_ptr<const signal::Signature>>& sigs,
    std::int64_t period_samples) {
  if (sigs.empty()) throw std::invalid_argument("phase_align: no signatures");
  const auto p = static_cast<std::size_t>(period_samples);
  for (const auto& s : sigs)
    if (s->voltage.size() < p)
      throw std::invalid_argument("phase_align: signature shorter than one period");

  std::vector<std::int64_t> shifts(sigs.size(), 0);
  const auto& ref = sigs.front()->voltage.samples;
  for (std::size_t i = 1; i < sigs.size(); ++i) {
    const auto& v = sigs[i]->voltage.samples;
    double best = -std::numeric_limits<double>::infinity();
    std::int64_t best_lag = 0;
    for (std::size_t lag = 0; lag < p; ++lag) {
      double corr = 0.0;
      for (std::size_t n = 0; n < p; ++n) corr += v[(n + lag) % p] * ref[n];
      if (corr > best) {
        best = corr;
        best_lag = static_cast<std::int64_t>(lag);
      }
    }
    shifts[i] = best_lag;
  }
  return shifts;
}

AggregateExample aggregate(const std::vector<PlacedComponent>& components, double t_obs,
                           double f_down, const std::vector<std::string>& universe,
                           std::uint64_t id) {
  if (components.empty()) throw std::invalid_argument("aggregate: no components");
  const auto window_len = static_cast<std::int64_t>(std::llround(t_obs * f_down));

  AggregateExample ex;
  ex.id = id;
  ex.current.rate = f_down;
  ex.current.samples.assign(static_cast<std::size_t>(window_len), 0.0);
  ex.labels.assign(universe.size(), 0);

  for (const auto& comp : components) {
    const auto& cur = comp.signature->current.samples;
    const auto len = static_cast<std::int64_t>(cur.size());
    const std::int64_t off = comp.start_offset;
    const std::int64_t shift = comp.phase_shift;
    const std::int64_t lo = std::max<std::int64_t>(0, off);
    const std::int64_t hi = std::min(window_len, off + len);
    for (std::int64_t n = lo; n < hi; ++n) {
      const std::int64_t j = (n - off + shift) % len;
      ex.current.samples[static_cast<std::size_t>(n)] += cur[static_cast<std::size_t>(j)];
    }
    const auto it = std::lower_bound(universe.begin(), universe.end(), comp.signature->label);
    if (it == universe.end() || *it != comp.signature->label)
      throw DataError("aggregate: label '" + comp.signature->label + "' not in universe");
    ex.labels[static_cast<std::size_t>(it - universe.begin())] = 1;
    ex.placements.push_back(Placement{comp.signature->label, comp.signature->source_id,
                                      comp.start_offset, comp.phase_shift});
  }
  ex.w = static_cast<int>(std::count(ex.labels.begin(), ex.labels.end(), 1));
  return ex;
}

SynthesisManifest synthesize_collection(const PatternMap& patterns,
                                        const SynthesisSchedule& schedule, double f_ref,
                                        double f_down, int threads, const ExampleSink& sink) {
  schedule.validate();
  if (patterns.empty()) throw DataError("synthesize: empty pattern set");

  std::vector<std::string> universe;
  for (const auto& [label, sigs] : patterns) {
    if (sigs.empty()) throw DataError("synthesize: label '" + label + "' has no patterns");
    universe.push_back(label);
  }

  const auto pr = schedule.label_distribution.empty() ? uniform_distribution(universe)
                                                      : schedule.label_distribution;
  const auto period = static_cast<std::int64_t>(std::llround(f_down / f_ref));
  const auto window_len = static_cast<std::int64_t>(std::llround(schedule.t_obs * f_down));

  SynthesisManifest manifest;
  manifest.universe = universe;
  manifest.seed = schedule.seed;
  manifest.t_obs = schedule.t_obs;
  manifest.f_down = f_down;

  std::uint64_t next_id = 0;

  for (const auto& entry : schedule.entries) {
    const int w = entry.w;
    manifest.counts[w] = 0;

    // Combinations for this w. The w=1 case enumerates singleton labels; its
    // representations are the individual signatures, randomly shifted.
    std::vector<LabelSet> combos;
    if (w == 1) {
      const auto singles = sample_combinations(universe, 1, entry.b_comb_hat, pr,
                                               util::mix_seed(schedule.seed, 1));
      combos = singles;
    } else {
      combos = sample_combinations(universe, w, entry.b_comb_hat, pr,
                                   util::mix_seed(schedule.seed, static_cast<std::uint64_t>(w)));
    }
    const auto n_combos = static_cast<std::int64_t>(combos.size());
    manifest.combos[w] = n_combos;

    // Per-combination allocation is deterministic, so example ids can be
    // assigned before any waveform is generated.
    std::vector<std::int64_t> allocs(combos.size());
    for (std::size_t ci = 0; ci < combos.size(); ++ci) {
      const std::int64_t capacity = capacity_of(combos[ci], patterns);
      std::int64_t alloc;
      if (w == 1) {
        alloc = entry.b_repr_hat > 0 ? std::min(capacity, entry.b_repr_hat) : capacity;
        if (alloc < capacity)
          manifest.truncations.push_back(
              TruncationEvent{w, static_cast<std::int64_t>(ci), entry.b_repr_hat, capacity});
      } else {
        alloc = allocate_representations(combos[ci], patterns, entry.b_repr_hat, schedule.mode,
                                         n_combos, pr);
        if (entry.b_repr_hat > 0 && schedule.mode == AllocationMode::Budget) {
          const std::int64_t budget = std::max<std::int64_t>(
              1, std::llround(static_cast<double>(entry.b_repr_hat) /
                              static_cast<double>(n_combos)));
          if (capacity < budget)
            manifest.truncations.push_back(
                TruncationEvent{w, static_cast<std::int64_t>(ci), budget, capacity});
        }
      }
      allocs[ci] = alloc;
    }
    std::vector<std::uint64_t> base_ids(combos.size());
    for (std::size_t ci = 0; ci < combos.size(); ++ci) {
      base_ids[ci] = next_id;
      next_id += static_cast<std::uint64_t>(allocs[ci]);
    }

    // Combinations are independent: each derives its own seed from
    // (seed, w, index), so parallel and serial runs emit identical bytes.
    const std::size_t chunk_size = std::max<std::size_t>(1, static_cast<std::size_t>(threads) * 4);
    for (std::size_t chunk_lo = 0; chunk_lo < combos.size(); chunk_lo += chunk_size) {
      const std::size_t chunk_hi = std::min(combos.size(), chunk_lo + chunk_size);
      std::vector<std::vector<AggregateExample>> buffers(chunk_hi - chunk_lo);

      util::parallel_for(chunk_hi - chunk_lo, threads, [&](std::size_t local) {
        const std::size_t ci = chunk_lo + local;
        const auto& combo = combos[ci];
        util::Rng rng(util::mix_seed(schedule.seed, static_cast<std::uint64_t>(w),
                                     static_cast<std::uint64_t>(ci)));

        std::vector<std::vector<int>> tuples;
        if (w == 1) {
          const auto n = patterns_for(patterns, combo.front()).size();
          for (std::int64_t si = 0; si < allocs[ci]; ++si)
            tuples.push_back({static_cast<int>(si % static_cast<std::int64_t>(n))});
        } else {
          tuples = sample_representation(combo, patterns, allocs[ci], rng);
        }

        auto& out = buffers[local];
        out.reserve(tuples.size());
        for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
          std::vector<std::shared_ptr<const signal::Signature>> sigs;
          sigs.reserve(combo.size());
          for (std::size_t li = 0; li < combo.size(); ++li)
            sigs.push_back(patterns_for(patterns, combo[li])[static_cast<std::size_t>(
                tuples[ti][li])]);

          std::vector<PlacedComponent> comps(sigs.size());
          for (std::size_t li = 0; li < sigs.size(); ++li) {
            comps[li].signature = sigs[li];
            comps[li].start_offset =
                place_in_window(static_cast<std::int64_t>(sigs[li]->current.size()),
                                window_len, period, rng);
          }
          const auto shifts = phase_align(sigs, period);
          for (std::size_t li = 0; li < sigs.size(); ++li)
            comps[li].phase_shift = shifts[li];

          out.push_back(aggregate(comps, schedule.t_obs, f_down, universe,
                                  base_ids[ci] + static_cast<std::uint64_t>(ti)));
        }
      });

      for (auto& buffer : buffers) {
        for (auto& ex : buffer) {
          manifest.counts[w] += 1;
          sink(std::move(ex));
        }
      }
    }
  }
  return manifest;
}

}  // namespace nilm::sns

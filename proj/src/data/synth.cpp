#include "sam/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sam/numkernel/error.hpp"
#include "sam/numkernel/random.hpp"

namespace sam {

namespace {

constexpr std::int64_t kRankTs = 1'700'000'000;
constexpr std::uint64_t kMaxElapsed = std::uint64_t{1} << 24;

ItemIds ids_for(std::uint32_t item, const SynthSpec& spec) {
  return {item, static_cast<std::uint32_t>(item % spec.cate_vocab),
          static_cast<std::uint32_t>(item % spec.shop_vocab),
          static_cast<std::uint32_t>(item % spec.brand_vocab)};
}

std::size_t signal_slots(SynthTask task) { return task == SynthTask::compositional ? 2 : 1; }

}  // namespace

SynthTask parse_synth_task(std::string_view name) {
  if (name == "compositional") return SynthTask::compositional;
  if (name == "pairwise") return SynthTask::pairwise;
  throw ConfigError("unknown synthetic task '" + std::string(name) +
                    "' (expected compositional or pairwise)");
}

void SynthSpec::validate() const {
  if (groups == 0) throw ConfigError("groups must be at least 1");
  if (3 * groups > vocab)
    throw ConfigError("groups * 3 = " + std::to_string(3 * groups) + " exceeds vocab " +
                      std::to_string(vocab));
  if (vocab <= 3) throw ConfigError("vocab must exceed 3 so that noise items exist");
  if (seq_len < signal_slots(task))
    throw ConfigError("seq_len " + std::to_string(seq_len) + " too short for the task");
  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0))
    throw ConfigError("noise ratio must lie in [0, 1]");
  if (cate_vocab == 0 || shop_vocab == 0 || brand_vocab == 0)
    throw ConfigError("side-feature vocabularies must be positive");
}

std::vector<Sample> generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t signal = signal_slots(spec.task);
  const auto noise_count = static_cast<std::size_t>(
      std::llround(spec.noise_ratio * static_cast<double>(spec.seq_len - signal)));
  // Noise is any item outside the sample's own group, so other groups' items
  // act as distractors.
  std::uint32_t own_base = 0;
  auto noise_item = [&] {
    const auto r = static_cast<std::uint32_t>(rng.below(spec.vocab - 3));
    return r >= own_base ? r + 3 : r;
  };

  std::vector<Sample> out;
  out.reserve(spec.num_samples);
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    Sample s;
    s.label = i % 2 == 0 ? 1 : 0;
    const auto g = static_cast<std::uint32_t>(rng.below(spec.groups));
    const std::uint32_t x = 3 * g, y = 3 * g + 1, z = 3 * g + 2;
    own_base = x;
    s.target = ids_for(z, spec);

    std::vector<std::uint32_t> items;
    items.reserve(signal + noise_count);
    if (spec.task == SynthTask::compositional) {
      if (s.label == 1) {
        items.push_back(x);
        items.push_back(y);
      } else {
        items.push_back(rng.coin() ? x : y);
        items.push_back(noise_item());
      }
    } else {
      items.push_back(s.label == 1 ? x : noise_item());
    }
    for (std::size_t k = 0; k < noise_count; ++k) items.push_back(noise_item());
    rng.shuffle(items);

    std::vector<std::uint64_t> elapsed(items.size());
    for (auto& e : elapsed) e = rng.below(kMaxElapsed);
    std::sort(elapsed.begin(), elapsed.end(), std::greater<>());

    s.sequence.rank_ts = kRankTs;
    s.sequence.events.reserve(items.size());
    for (std::size_t k = 0; k < items.size(); ++k)
      s.sequence.events.push_back({ids_for(items[k], spec), kRankTs - static_cast<std::int64_t>(elapsed[k])});
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sam

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sam/data/corpus.hpp"

namespace sam {

enum class SynthTask {
  /// Target z is clicked only when both x and y of its group appear.
  compositional,
  /// Target z is clicked when its single partner x appears.
  pairwise,
};

SynthTask parse_synth_task(std::string_view name);

/// Planted-group corpus. Group g owns items x = 3g, y = 3g + 1 and target
/// z = 3g + 2. Noise for a sample of group g is drawn uniformly from every
/// item outside g, including other groups' items.
///
/// compositional: positives hold x and y, negatives hold exactly one of them
///   (chosen uniformly) plus one extra noise item so both classes have the
///   same length.
/// pairwise: positives hold x, negatives hold one extra noise item instead.
///
/// The remaining round(noise_ratio * (seq_len - signal)) positions are noise; with noise_ratio = 1 every
/// sequence has exactly seq_len events. Labels alternate 1, 0, 1, ... so the
/// classes are balanced.
struct SynthSpec {
  SynthTask task = SynthTask::compositional;
  std::size_t vocab = 1000;
  std::size_t groups = 50;
  std::size_t seq_len = 30;
  std::size_t num_samples = 1000;
  double noise_ratio = 1.0;
  std::uint64_t seed = 1;
  // side-feature ids are item_id modulo these sizes
  std::size_t cate_vocab = 16;
  std::size_t shop_vocab = 32;
  std::size_t brand_vocab = 64;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

std::vector<Sample> generate_synthetic(const SynthSpec& spec);

}  // namespace sam

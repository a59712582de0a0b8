#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sam/data/corpus.hpp"
#include "sam/samnet/samnet.hpp"

namespace sam {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;
};

/// Area under the ROC curve via the rank-sum statistic with average ranks for
/// ties, i.e. the fraction of (positive, negative) pairs ordered correctly
/// with ties counted half. Throws DataError when either class is absent.
double auc(std::span<const ScoredLabel> scored);

/// Shannon entropy (nats) of the weights after normalising them to sum to
/// one. An all-zero vector is treated as uniform. Negative weights are
/// rejected.
double attention_entropy(std::span<const double> weights);

/// Mean attention entropy per pooling pass (index 0 is pass 1), averaged over
/// samples with a non-empty sequence.
struct EntropyTrace {
  std::vector<double> mean_entropy;
};

EntropyTrace entropy_vs_iterations(const SamModel& model, std::span<const Sample> samples);

/// Scores every sample with the model.
std::vector<ScoredLabel> score_corpus(const SamModel& model, std::span<const Sample> samples);

/// CSV with header `iteration,mean_entropy`.
void write_entropy_csv(std::ostream& out, const EntropyTrace& trace);

}  // namespace sam

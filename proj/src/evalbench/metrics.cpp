#include "sam/evalbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "sam/evalbench/csv.hpp"
#include "sam/numkernel/error.hpp"

namespace sam {

double auc(std::span<const ScoredLabel> scored) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : scored) {
    if (s.label == 1)
      ++pos;
    else if (s.label == 0)
      ++neg;
    else
      throw DataError("auc: label must be 0 or 1, got " + std::to_string(s.label));
    if (std::isnan(s.score)) throw NumericError("auc: NaN score");
  }
  if (pos == 0 || neg == 0)
    throw DataError("auc: undefined with " + std::to_string(pos) + " positives and " +
                    std::to_string(neg) + " negatives");

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });

  // Average ranks are half-integers, so every quantity below is exact.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scored[order[j + 1]].score == scored[order[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (scored[order[k]].label == 1) positive_rank_sum += avg_rank;
    i = j + 1;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * n);
}

double attention_entropy(std::span<const double> weights) {
  if (weights.empty()) throw ShapeError("attention_entropy: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w))
      throw DataError("attention_entropy: weights must be non-negative, got " + std::to_string(w));
    total += w;
  }
  if (total == 0.0) return std::log(static_cast<double>(weights.size()));
  double h = 0.0;
  for (double w : weights) {
    const double a = w / total;
    if (a > 0.0) h -= a * std::log(a);
  }
  return h;
}

EntropyTrace entropy_vs_iterations(const SamModel& model, std::span<const Sample> samples) {
  EntropyTrace trace;
  std::size_t counted = 0;
  for (const auto& s : samples) {
    if (s.sequence.size() == 0) continue;
    const SamOutputs out = predict(model, s.sequence, s.target);
    if (trace.mean_entropy.empty()) trace.mean_entropy.assign(out.attention.size(), 0.0);
    for (std::size_t n = 0; n < out.attention.size(); ++n)
      trace.mean_entropy[n] += attention_entropy(out.attention[n]);
    ++counted;
  }
  if (counted == 0) throw DataError("entropy_vs_iterations: no sample has a non-empty sequence");
  for (double& h : trace.mean_entropy) h /= static_cast<double>(counted);
  return trace;
}

std::vector<ScoredLabel> score_corpus(const SamModel& model, std::span<const Sample> samples) {
  std::vector<ScoredLabel> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back({predict(model, s.sequence, s.target).probability, s.label});
  return out;
}

void write_entropy_csv(std::ostream& out, const EntropyTrace& trace) {
  out << "iteration,mean_entropy\n";
  for (std::size_t n = 0; n < trace.mean_entropy.size(); ++n)
    out << n + 1 << ',' << format_double(trace.mean_entropy[n]) << '\n';
}

}  // namespace sam

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sam/encoder/encoder.hpp"

namespace sam {

/// One labelled impression: did the user click `target` given `sequence`.
struct Sample {
  int label = 0;
  ItemIds target;
  BehaviorSequence sequence;  // carries rank_ts
  std::size_t line = 0;       // 1-based source line, 0 when generated

  friend bool operator==(const Sample& a, const Sample& b) {
    return a.label == b.label && a.target == b.target && a.sequence == b.sequence;
  }
};

/// Parses the tab-separated corpus format
///   label \t item:cate:shop:brand \t ev1,ev2,... \t rank_ts
/// with ev = item:cate:shop:brand:ts in chronological order. Empty lines are
/// skipped. Errors are DataError naming the line and column.
std::vector<Sample> parse_corpus_text(std::string_view text);
std::vector<Sample> parse_corpus(const std::string& path);

std::string format_sample(const Sample& s);
std::string format_corpus(const std::vector<Sample>& samples);
void write_corpus(const std::string& path, const std::vector<Sample>& samples);

/// Vocabulary sizes (max id + 1 per field) and longest sequence in a corpus.
struct CorpusStats {
  std::size_t item_vocab = 0, cate_vocab = 0, shop_vocab = 0, brand_vocab = 0;
  std::size_t max_len = 0;
  std::size_t positives = 0;
};
CorpusStats corpus_stats(const std::vector<Sample>& samples);

}  // namespace sam

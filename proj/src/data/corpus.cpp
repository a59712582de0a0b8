#include "sam/data/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sam/numkernel/error.hpp"

namespace sam {

namespace {

const char* const kColumnNames[] = {"label", "target", "events", "rank_ts"};

struct LineContext {
  std::size_t line;
  [[noreturn]] void fail(std::size_t column, const std::string& what) const {
    throw DataError("line " + std::to_string(line) + ", column " + std::to_string(column) + " (" +
                    kColumnNames[column - 1] + "): " + what);
  }
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    if (at == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

template <class Int>
bool parse_uint(std::string_view s, Int& out) {
  if (s.empty() || s.front() == '-') return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

ItemIds parse_ids(std::span<const std::string_view> f, const LineContext& ctx, std::size_t column,
                  const std::string& where) {
  ItemIds ids;
  if (!parse_uint(f[0], ids.item) || !parse_uint(f[1], ids.cate) || !parse_uint(f[2], ids.shop) ||
      !parse_uint(f[3], ids.brand))
    ctx.fail(column, where + ": ids must be non-negative base-10 integers");
  return ids;
}

Sample parse_line(std::string_view line, std::size_t line_no) {
  const LineContext ctx{line_no};
  const auto cols = split(line, '\t');
  if (cols.size() != 4)
    throw DataError("line " + std::to_string(line_no) + ": expected 4 tab-separated columns, found " +
                    std::to_string(cols.size()));
  Sample s;
  s.line = line_no;
  if (cols[0] == "1")
    s.label = 1;
  else if (cols[0] == "0")
    s.label = 0;
  else
    ctx.fail(1, "label must be 0 or 1, got '" + std::string(cols[0]) + "'");

  const auto target = split(cols[1], ':');
  if (target.size() != 4) ctx.fail(2, "expected item:cate:shop:brand");
  s.target = parse_ids(target, ctx, 2, "target");

  std::int64_t rank_ts = 0;
  if (!parse_uint(cols[3], rank_ts)) ctx.fail(4, "rank_ts must be a non-negative integer");
  s.sequence.rank_ts = rank_ts;

  if (!cols[2].empty()) {
    const auto events = split(cols[2], ',');
    s.sequence.events.reserve(events.size());
    for (std::size_t k = 0; k < events.size(); ++k) {
      const std::string where = "event " + std::to_string(k + 1);
      const auto f = split(events[k], ':');
      if (f.size() != 5) ctx.fail(3, where + ": expected item:cate:shop:brand:ts");
      BehaviorEvent ev;
      ev.ids = parse_ids(std::span(f).first(4), ctx, 3, where);
      if (!parse_uint(f[4], ev.ts)) ctx.fail(3, where + ": ts must be a non-negative integer");
      if (!s.sequence.events.empty() && ev.ts < s.sequence.events.back().ts)
        ctx.fail(3, where + ": timestamp " + std::to_string(ev.ts) + " precedes previous event " +
                        std::to_string(s.sequence.events.back().ts));
      if (ev.ts > rank_ts)
        ctx.fail(3, where + ": timestamp " + std::to_string(ev.ts) + " is after rank_ts " +
                        std::to_string(rank_ts));
      s.sequence.events.push_back(ev);
    }
  }
  return s;
}

void append_ids(std::string& out, const ItemIds& ids) {
  out += std::to_string(ids.item);
  out += ':';
  out += std::to_string(ids.cate);
  out += ':';
  out += std::to_string(ids.shop);
  out += ':';
  out += std::to_string(ids.brand);
}

}  // namespace

std::vector<Sample> parse_corpus_text(std::string_view text) {
  std::vector<Sample> samples;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) samples.push_back(parse_line(line, line_no));
    start = end + 1;
  }
  return samples;
}

std::vector<Sample> parse_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus_text(buf.str());
}

std::string format_sample(const Sample& s) {
  std::string out;
  out += s.label ? '1' : '0';
  out += '\t';
  append_ids(out, s.target);
  out += '\t';
  for (std::size_t k = 0; k < s.sequence.events.size(); ++k) {
    if (k) out += ',';
    append_ids(out, s.sequence.events[k].ids);
    out += ':';
    out += std::to_string(s.sequence.events[k].ts);
  }
  out += '\t';
  out += std::to_string(s.sequence.rank_ts);
  return out;
}

std::string format_corpus(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += format_sample(s);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus '" + path + "'");
  const std::string text = format_corpus(samples);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

CorpusStats corpus_stats(const std::vector<Sample>& samples) {
  CorpusStats st;
  auto see = [&](const ItemIds& ids) {
    st.item_vocab = std::max<std::size_t>(st.item_vocab, ids.item + 1);
    st.cate_vocab = std::max<std::size_t>(st.cate_vocab, ids.cate + 1);
    st.shop_vocab = std::max<std::size_t>(st.shop_vocab, ids.shop + 1);
    st.brand_vocab = std::max<std::size_t>(st.brand_vocab, ids.brand + 1);
  };
  for (const auto& s : samples) {
    see(s.target);
    for (const auto& ev : s.sequence.events) see(ev.ids);
    st.max_len = std::max(st.max_len, s.sequence.size());
    st.positives += s.label == 1;
  }
  return st;
}

}  // namespace sam

#include "sam/data/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace sam {

namespace {

using Kind = CheckpointError::Kind;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(Kind::truncated, "checkpoint truncated while reading " + what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32(const std::string& what) {
    auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  std::uint64_t u64(const std::string& what) {
    auto b = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::map<std::string, std::string> config_fields(const SamConfig& c) {
  std::string mlp;
  for (std::size_t i = 0; i < c.mlp_hidden.size(); ++i) {
    if (i) mlp += ',';
    mlp += std::to_string(c.mlp_hidden[i]);
  }
  const auto& e = c.embedding;
  return {
      {"dim", std::to_string(e.dim)},
      {"attn_hidden", std::to_string(c.attn_hidden)},
      {"walk_iters", std::to_string(c.walk_iters)},
      {"mem_steps", std::to_string(c.mem_steps)},
      {"mlp_hidden", mlp},
      {"variant", std::string(to_string(c.variant))},
      {"use_ts_pos", c.use_ts_pos ? "1" : "0"},
      {"extra_dim", std::to_string(c.extra_dim)},
      {"item_vocab", std::to_string(e.item_vocab)},
      {"cate_vocab", std::to_string(e.cate_vocab)},
      {"shop_vocab", std::to_string(e.shop_vocab)},
      {"brand_vocab", std::to_string(e.brand_vocab)},
      {"max_len", std::to_string(e.max_len)},
      {"max_time_bucket", std::to_string(e.max_time_bucket)},
  };
}

std::size_t to_size(const std::string& key, std::string_view value) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw CheckpointError(Kind::malformed, "config field '" + key + "' is not an integer: '" +
                                               std::string(value) + "'");
  return out;
}

std::uint32_t float_bits(double v) { return std::bit_cast<std::uint32_t>(static_cast<float>(v)); }

}  // namespace

std::string config_to_text(const SamConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_fields(config)) out += k + "=" + v + "\n";
  return out;
}

SamConfig config_from_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CheckpointError(Kind::malformed, "config line without '=': '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw CheckpointError(Kind::malformed, "config field '" + k + "' missing");
    return it->second;
  };
  SamConfig c;
  auto& e = c.embedding;
  e.dim = to_size("dim", get("dim"));
  c.attn_hidden = to_size("attn_hidden", get("attn_hidden"));
  c.walk_iters = to_size("walk_iters", get("walk_iters"));
  c.mem_steps = to_size("mem_steps", get("mem_steps"));
  c.mlp_hidden.clear();
  const std::string& mlp = get("mlp_hidden");
  if (!mlp.empty()) {
    std::size_t start = 0;
    while (true) {
      const auto comma = mlp.find(',', start);
      c.mlp_hidden.push_back(to_size("mlp_hidden", std::string_view(mlp).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  try {
    c.variant = parse_variant(get("variant"));
  } catch (const ConfigError& err) {
    throw CheckpointError(Kind::malformed, err.what());
  }
  c.use_ts_pos = to_size("use_ts_pos", get("use_ts_pos")) != 0;
  c.extra_dim = to_size("extra_dim", get("extra_dim"));
  e.item_vocab = to_size("item_vocab", get("item_vocab"));
  e.cate_vocab = to_size("cate_vocab", get("cate_vocab"));
  e.shop_vocab = to_size("shop_vocab", get("shop_vocab"));
  e.brand_vocab = to_size("brand_vocab", get("brand_vocab"));
  e.max_len = to_size("max_len", get("max_len"));
  e.max_time_bucket = to_size("max_time_bucket", get("max_time_bucket"));
  return c;
}

std::vector<std::string> config_diff(const SamConfig& a, const SamConfig& b) {
  const auto fa = config_fields(a), fb = config_fields(b);
  std::vector<std::string> diff;
  for (const auto& [k, v] : fa)
    if (fb.at(k) != v) diff.push_back(k + " (" + v + " vs " + fb.at(k) + ")");
  return diff;
}

std::string encode_checkpoint(const SamModel& model) {
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  const std::string cfg = config_to_text(model.config());
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const ParamSet& params = model.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(i);
    const Tensor& t = params.at(i);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.data()) put_u32(out, float_bits(v));
  }
  return out;
}

SamModel decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  const auto magic = r.take(sizeof kCheckpointMagic, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw CheckpointError(Kind::bad_magic, "not a SAM checkpoint (bad magic bytes)");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError(Kind::version_mismatch,
                          "checkpoint version " + std::to_string(version) +
                              " is not supported (this build reads version " +
                              std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t cfg_len = r.u32("config length");
  const SamConfig config = config_from_text(r.take(cfg_len, "config"));
  try {
    config.validate();
  } catch (const ConfigError& err) {
    throw CheckpointError(Kind::malformed, std::string("checkpoint config invalid: ") + err.what());
  }

  ParamSet loaded;
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string rec = "tensor record " + std::to_string(i + 1);
    const std::uint32_t name_len = r.u32(rec + " name length");
    std::string name(r.take(name_len, rec + " name"));
    const std::string label = "tensor '" + name + "'";
    const std::uint32_t rank = r.u32(label + " rank");
    if (rank == 0 || rank > 2)
      throw CheckpointError(Kind::malformed, label + " has unsupported rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t total = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      shape.push_back(static_cast<std::size_t>(r.u64(label + " dims")));
      total *= shape.back();
    }
    if (total > bytes.size())
      throw CheckpointError(Kind::truncated, "checkpoint truncated while reading " + label + " data");
    Tensor t(shape);
    const auto raw = r.take(total * 4, label + " data");
    for (std::size_t k = 0; k < total; ++k) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(raw[4 * k + b]);
      t[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    if (loaded.find(name))
      throw CheckpointError(Kind::malformed, "duplicate " + label);
    loaded.add(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError(Kind::malformed, "trailing bytes after last tensor record");

  try {
    return SamModel::from_params(config, loaded);
  } catch (const DataError& err) {
    throw CheckpointError(Kind::unknown_tensor, err.what());
  }
}

void save_checkpoint(const SamModel& model, const std::string& path) {
  const std::string bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(Kind::io, "cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::io, "write failed for '" + path + "'");
}

SamModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace sam

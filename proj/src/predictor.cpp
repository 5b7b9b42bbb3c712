#include "gencarve/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "gencarve/digest.hpp"
#include "gencarve/error.hpp"
#include "gencarve/rng.hpp"

namespace gencarve {

std::string_view decode_mode_name(DecodeMode m) {
  switch (m) {
    case DecodeMode::Greedy: return "greedy";
    case DecodeMode::Temperature: return "temperature";
    case DecodeMode::TopK: return "top_k";
  }
  return "?";
}

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "greedy") return DecodeMode::Greedy;
  if (name == "temperature") return DecodeMode::Temperature;
  if (name == "top_k" || name == "topk") return DecodeMode::TopK;
  throw Error(Errc::ConfigError, "unknown decode mode '" + std::string(name) + "'");
}

std::uint32_t SuccessorTable::count_of(std::uint8_t byte) const {
  auto it = std::lower_bound(counts.begin(), counts.end(), byte,
                             [](const auto& entry, std::uint8_t b) { return entry.first < b; });
  return (it != counts.end() && it->first == byte) ? it->second : 0;
}

ByteModel::ByteModel(std::uint32_t order, double smoothing) : order_(order), smoothing_(smoothing) {
  if (order > kMaxOrder) throw Error(Errc::InvalidArgument, "order must be <= " + std::to_string(kMaxOrder));
  if (!(smoothing > 0) || !std::isfinite(smoothing)) throw Error(Errc::InvalidArgument, "smoothing must be > 0");
}

std::uint64_t ByteModel::key(ByteView context) {
  std::uint64_t k = std::uint64_t{context.size()} << 56;
  for (std::size_t j = 0; j < context.size(); ++j) k |= std::uint64_t{context[j]} << (8 * j);
  return k;
}

const SuccessorTable* ByteModel::find(ByteView context) const {
  if (context.size() > order_) return nullptr;
  auto it = tables_.find(key(context));
  return it == tables_.end() ? nullptr : &it->second;
}

const SuccessorTable& ByteModel::longest_match(ByteView history) const {
  const std::size_t longest = std::min<std::size_t>(order_, history.size());
  for (std::size_t len = longest + 1; len-- > 0;) {
    if (const auto* t = find(history.last(len))) return *t;
  }
  // Order-0 is populated by any non-empty corpus.
  throw Error(Errc::CorruptModel, "model has no order-0 table");
}

std::array<double, 256> ByteModel::distribution(ByteView history) const {
  const SuccessorTable& t = longest_match(history);
  const double denom = static_cast<double>(t.total) + 256.0 * smoothing_;
  std::array<double, 256> p;
  p.fill(smoothing_ / denom);
  for (const auto& [byte, count] : t.counts) p[byte] = (static_cast<double>(count) + smoothing_) / denom;
  return p;
}

std::string ByteModel::id() const {
  return "bytemodel-k" + std::to_string(order_) + "-a" + format_double(smoothing_) + "@" +
         training_digest_.substr(0, 16);
}

ByteModel train(const std::vector<Bytes>& corpus, std::uint32_t order, double smoothing) {
  ByteModel model(order, smoothing);
  Sha256Builder digest;
  bool any = false;
  for (const Bytes& item : corpus) {
    digest.update_u64(item.size());
    digest.update(item);
    for (std::size_t i = 0; i < item.size(); ++i) {
      any = true;
      const std::uint8_t next = item[i];
      const std::size_t longest = std::min<std::size_t>(order, i);
      for (std::size_t len = 0; len <= longest; ++len) {
        SuccessorTable& t = model.tables_[ByteModel::key(ByteView(item).subspan(i - len, len))];
        auto it = std::lower_bound(t.counts.begin(), t.counts.end(), next,
                                   [](const auto& e, std::uint8_t b) { return e.first < b; });
        if (it != t.counts.end() && it->first == next) {
          if (it->second == UINT32_MAX) throw Error(Errc::InvalidArgument, "successor count overflow");
          ++it->second;
        } else {
          t.counts.insert(it, {next, 1});
        }
        ++t.total;
      }
    }
  }
  if (!any) throw Error(Errc::EmptyCorpus, "training corpus has no bytes");
  const Sha256 d = digest.finish();
  model.training_digest_ = to_hex(d);
  return model;
}

namespace {

std::uint8_t greedy_pick(const SuccessorTable& t) {
  std::uint8_t best = 0;
  std::uint32_t best_count = 0;
  for (const auto& [byte, count] : t.counts) {
    if (count > best_count) {
      best = byte;
      best_count = count;
    }
  }
  return best;
}

std::uint8_t sample_from(const std::array<double, 256>& p, const SamplingPolicy& policy, Rng& rng) {
  std::array<int, 256> order;
  std::iota(order.begin(), order.end(), 0);
  std::size_t keep = 256;
  if (policy.mode == DecodeMode::TopK) {
    keep = std::min<std::size_t>(policy.top_k, 256);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
  }
  double pmax = 0;
  for (std::size_t i = 0; i < keep; ++i) pmax = std::max(pmax, p[order[i]]);
  std::array<double, 256> w{};
  double sum = 0;
  for (std::size_t i = 0; i < keep; ++i) {
    w[i] = std::exp((std::log(p[order[i]]) - std::log(pmax)) / policy.temperature);
    sum += w[i];
  }
  double u = rng.unit() * sum;
  for (std::size_t i = 0; i < keep; ++i) {
    if (u < w[i]) return static_cast<std::uint8_t>(order[i]);
    u -= w[i];
  }
  return static_cast<std::uint8_t>(order[keep - 1]);
}

}  // namespace

Bytes predict(const ByteModel& model, ByteView prefix, std::size_t length, const SamplingPolicy& policy) {
  if (length == 0) throw Error(Errc::InvalidArgument, "prediction length must be >= 1");
  if (policy.mode != DecodeMode::Greedy && !(policy.temperature > 0))
    throw Error(Errc::InvalidArgument, "temperature must be > 0");
  if (policy.mode == DecodeMode::TopK && policy.top_k == 0) throw Error(Errc::InvalidArgument, "top_k must be >= 1");

  // Only the trailing `order` bytes of the history ever matter.
  const std::size_t order = model.order();
  Bytes history(prefix.end() - std::min(prefix.size(), order), prefix.end());
  Bytes out;
  out.reserve(length);
  Rng rng(policy.seed);
  for (std::size_t step = 0; step < length; ++step) {
    std::uint8_t next;
    if (policy.mode == DecodeMode::Greedy) {
      next = greedy_pick(model.longest_match(history));
    } else {
      next = sample_from(model.distribution(history), policy, rng);
    }
    out.push_back(next);
    history.push_back(next);
    if (history.size() > order) history.erase(history.begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: "GCBM" | version u8 | order u8 | u16 0 | smoothing f64 |
// u16 digest length + digest | u64 table count | tables sorted by key
// (u64 key, u64 total, u16 n, n x (u8 byte, u32 count)) | sha256 of all above.

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  Bytes& bytes() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  ByteView raw(std::size_t n) {
    need(n);
    ByteView v = in_.subspan(pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(Errc::CorruptModel, "model data truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  ByteView in_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kModelMagic = "GCBM";

}  // namespace

Bytes ByteModel::save() const {
  Writer w;
  w.raw(as_bytes(kModelMagic));
  w.u8(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(order_));
  w.u16(0);
  w.u64(std::bit_cast<std::uint64_t>(smoothing_));
  w.u16(static_cast<std::uint16_t>(training_digest_.size()));
  w.raw(as_bytes(training_digest_));

  std::vector<std::uint64_t> keys;
  keys.reserve(tables_.size());
  for (const auto& [k, t] : tables_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  w.u64(keys.size());
  for (std::uint64_t k : keys) {
    const SuccessorTable& t = tables_.at(k);
    w.u64(k);
    w.u64(t.total);
    w.u16(static_cast<std::uint16_t>(t.counts.size()));
    for (const auto& [byte, count] : t.counts) {
      w.u8(byte);
      w.u32(count);
    }
  }
  const Sha256 check = sha256(w.bytes());
  w.raw(check);
  return std::move(w.bytes());
}

ByteModel ByteModel::load(ByteView data) {
  if (data.size() < kModelMagic.size() + 1 + 32) throw Error(Errc::CorruptModel, "model data truncated");
  if (!std::equal(kModelMagic.begin(), kModelMagic.end(), data.begin())) throw Error(Errc::CorruptModel, "bad magic");
  if (data[4] != kFormatVersion)
    throw Error(Errc::VersionMismatch, "model format version " + std::to_string(data[4]) + ", expected " +
                                           std::to_string(kFormatVersion));
  const ByteView body = data.first(data.size() - 32);
  const Sha256 check = sha256(body);
  if (!std::equal(check.begin(), check.end(), data.end() - 32)) throw Error(Errc::CorruptModel, "checksum mismatch");

  Reader r(body);
  r.raw(4);
  r.u8();
  const std::uint32_t order = r.u8();
  r.u16();
  const double smoothing = std::bit_cast<double>(r.u64());
  ByteModel model;
  try {
    model = ByteModel(order, smoothing);
  } catch (const Error& e) {
    throw Error(Errc::CorruptModel, e.what());
  }
  const ByteView digest = r.raw(r.u16());
  model.training_digest_.assign(digest.begin(), digest.end());
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t k = r.u64();
    if ((k >> 56) > order) throw Error(Errc::CorruptModel, "context longer than model order");
    SuccessorTable t;
    t.total = r.u64();
    const std::uint16_t entries = r.u16();
    std::uint64_t sum = 0;
    for (std::uint16_t e = 0; e < entries; ++e) {
      const std::uint8_t byte = r.u8();
      const std::uint32_t count = r.u32();
      if (!t.counts.empty() && t.counts.back().first >= byte) throw Error(Errc::CorruptModel, "unsorted successors");
      t.counts.emplace_back(byte, count);
      sum += count;
    }
    if (sum != t.total || t.total == 0) throw Error(Errc::CorruptModel, "successor totals inconsistent");
    model.tables_.emplace(k, std::move(t));
  }
  if (!r.done()) throw Error(Errc::CorruptModel, "trailing bytes in model");
  if (!model.find({})) throw Error(Errc::CorruptModel, "model has no order-0 table");
  return model;
}

}  // namespace gencarve

#include "collapsar/encoding/mns.hpp"

#include <limits>
#include <numeric>

#include "collapsar/errors.hpp"

namespace collapsar {

namespace {

// base^length - 1, saturating at int64 max.
std::int64_t representable(int base, int length) {
  std::int64_t cap = 1;
  for (int k = 0; k < length; ++k) {
    if (cap > std::numeric_limits<std::int64_t>::max() / base) {
      return std::numeric_limits<std::int64_t>::max();
    }
    cap *= base;
  }
  return cap - 1;
}

}  // namespace

MNSConfig MNSConfig::covering(std::int64_t max_value, std::size_t total_dim,
                              std::vector<int> bases) {
  if (max_value < 0) throw ConfigError("max_value must be non-negative");
  MNSConfig cfg;
  cfg.bases = std::move(bases);
  if (cfg.bases.empty() || total_dim < cfg.bases.size()) {
    throw ConfigError("MNS needs at least one system and one dimension per system");
  }
  for (int base : cfg.bases) {
    if (base < 2) throw ConfigError("MNS base must be >= 2");
    int length = 1;
    while (representable(base, length) < max_value) ++length;
    cfg.lengths.push_back(length);
  }
  const std::size_t n = cfg.bases.size();
  for (std::size_t s = 0; s < n; ++s) {
    cfg.dims.push_back(total_dim / n + (s < total_dim % n ? 1 : 0));
  }
  return cfg;
}

std::size_t MNSConfig::output_dim() const noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{0});
}

std::int64_t MNSConfig::max_value() const {
  std::int64_t cap = std::numeric_limits<std::int64_t>::max();
  for (std::size_t s = 0; s < bases.size(); ++s) cap = std::min(cap, representable(bases[s], lengths[s]));
  return cap;
}

void MNSConfig::validate() const {
  if (bases.empty()) throw ConfigError("MNS needs at least one numeral system");
  if (lengths.size() != bases.size() || dims.size() != bases.size()) {
    throw ConfigError("MNS bases, lengths and dims must have equal counts");
  }
  for (std::size_t s = 0; s < bases.size(); ++s) {
    if (bases[s] < 2) throw ConfigError("MNS base must be >= 2, got " + std::to_string(bases[s]));
    if (lengths[s] < 1) throw ConfigError("MNS length must be >= 1");
    if (dims[s] < 1) throw ConfigError("MNS dim must be >= 1");
  }
}

std::string MNSCodes::to_string(std::size_t s) const {
  const auto& d = digits.at(s);
  std::string out = "{";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(d.size() - i) + "_" + std::to_string(d[i]);
  }
  return out + "}";
}

MNSTables MNSTables::zeros(const MNSConfig& cfg) {
  cfg.validate();
  MNSTables t;
  for (std::size_t s = 0; s < cfg.num_systems(); ++s) {
    t.tables.emplace_back(static_cast<std::size_t>(cfg.bases[s] * cfg.lengths[s]), cfg.dims[s]);
  }
  return t;
}

MNSTables MNSTables::random(const MNSConfig& cfg, Rng& rng, double scale) {
  MNSTables t = zeros(cfg);
  for (auto& m : t.tables) {
    for (double& v : m.values()) v = scale * rng.normal();
  }
  return t;
}

MNSCodes mns_codes(std::int64_t value, const MNSConfig& cfg) {
  cfg.validate();
  if (value < 0) throw EncodeError("MNS value must be non-negative, got " + std::to_string(value));
  MNSCodes codes;
  codes.digits.reserve(cfg.num_systems());
  for (std::size_t s = 0; s < cfg.num_systems(); ++s) {
    const int base = cfg.bases[s];
    const int length = cfg.lengths[s];
    if (value > representable(base, length)) {
      throw EncodeError("value " + std::to_string(value) + " overflows base " +
                        std::to_string(base) + " with " + std::to_string(length) + " digits");
    }
    std::vector<int> d(static_cast<std::size_t>(length));
    std::int64_t rest = value;
    for (int i = length - 1; i >= 0; --i) {
      d[static_cast<std::size_t>(i)] = static_cast<int>(rest % base);
      rest /= base;
    }
    codes.digits.push_back(std::move(d));
  }
  return codes;
}

Vector mns_encode(const MNSCodes& codes, const MNSConfig& cfg, const MNSTables& tables) {
  if (tables.tables.size() != cfg.num_systems() || codes.digits.size() != cfg.num_systems()) {
    throw InputError("MNS tables/codes do not match the config");
  }
  Vector out;
  out.reserve(cfg.output_dim());
  for (std::size_t s = 0; s < cfg.num_systems(); ++s) {
    const Matrix& table = tables.tables[s];
    const auto& d = codes.digits[s];
    const int length = static_cast<int>(d.size());
    Vector pooled(table.cols(), 0.0);
    for (int i = 0; i < length; ++i) {
      axpy(1.0, table.row(mns_row(cfg.bases[s], length - i, d[static_cast<std::size_t>(i)])), pooled);
    }
    out.insert(out.end(), pooled.begin(), pooled.end());
  }
  return out;
}

Vector mns_encode(std::int64_t value, const MNSConfig& cfg, const MNSTables& tables) {
  return mns_encode(mns_codes(value, cfg), cfg, tables);
}

void mns_encode_backward(const MNSCodes& codes, const MNSConfig& cfg,
                         std::span<const double> upstream, MNSTables& grads) {
  if (upstream.size() != cfg.output_dim()) throw InputError("MNS upstream has wrong size");
  std::size_t offset = 0;
  for (std::size_t s = 0; s < cfg.num_systems(); ++s) {
    const auto& d = codes.digits[s];
    const int length = static_cast<int>(d.size());
    const auto slice = upstream.subspan(offset, cfg.dims[s]);
    for (int i = 0; i < length; ++i) {
      axpy(1.0, slice,
           grads.tables[s].row(mns_row(cfg.bases[s], length - i, d[static_cast<std::size_t>(i)])));
    }
    offset += cfg.dims[s];
  }
}

}  // namespace collapsar

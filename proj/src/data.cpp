#include "autoemb/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "autoemb/binio.hpp"
#include "autoemb/error.hpp"
#include "autoemb/rng.hpp"

namespace autoemb {

namespace {
constexpr std::uint32_t kCacheMagic = 0xAE3BC5E1u;
constexpr std::uint32_t kCacheVersion = 1;
constexpr double kMinRating = 0.5;
constexpr double kMaxRating = 5.0;
} // namespace

std::uint8_t binary_label_for(double rating) { return rating > 3.0 ? 1 : 0; }

std::uint8_t class_label_for(double rating) {
  // round half up, clamp to 1..5, shift to 0-based
  double r = std::floor(rating + 0.5);
  r = std::clamp(r, 1.0, 5.0);
  return static_cast<std::uint8_t>(r - 1.0);
}

Interaction make_interaction(std::uint32_t user, std::uint32_t item, double rating,
                             std::int64_t timestamp) {
  return Interaction{user, item, rating, timestamp,
                     binary_label_for(rating), class_label_for(rating)};
}

std::uint32_t IdMap::densify(std::int64_t raw) {
  auto [it, inserted] = to_dense_.try_emplace(raw,
      static_cast<std::uint32_t>(to_raw_.size()));
  if (inserted) to_raw_.push_back(raw);
  return it->second;
}

void IdMap::restore(std::vector<std::int64_t> raw_ids) {
  to_raw_ = std::move(raw_ids);
  to_dense_.clear();
  for (std::size_t i = 0; i < to_raw_.size(); ++i)
    to_dense_[to_raw_[i]] = static_cast<std::uint32_t>(i);
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  if (path.size() > 3 && path.ends_with(".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IngestError("cannot open " + path);
    std::string pending;
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) {
      pending.append(buf, static_cast<std::size_t>(n));
      std::size_t pos = 0, nl;
      while ((nl = pending.find('\n', pos)) != std::string::npos) {
        lines.emplace_back(pending.substr(pos, nl - pos));
        pos = nl + 1;
      }
      pending.erase(0, pos);
    }
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw IngestError("gzip read error in " + path);
    if (!pending.empty()) lines.push_back(std::move(pending));
  } else {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return lines;
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool parse_f64(std::string_view s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

} // namespace

Dataset parse_csv(const std::string& path, HeaderMode header) {
  Dataset data;
  const auto lines = read_lines(path);
  std::size_t start = 0;
  if (!lines.empty()) {
    const bool looks_like_header =
        lines[0].find_first_not_of("0123456789,.+-eE \t") != std::string::npos;
    if (header == HeaderMode::Present ||
        (header == HeaderMode::Auto && looks_like_header))
      start = 1;
  }
  data.interactions.reserve(lines.size() > start ? lines.size() - start : 0);
  for (std::size_t ln = start; ln < lines.size(); ++ln) {
    const std::string& line = lines[ln];
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view field[4];
    std::size_t nf = 0;
    while (nf < 4) {
      const std::size_t comma = rest.find(',');
      field[nf++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::int64_t raw_user, raw_item, ts;
    double rating;
    if (nf != 4 || !parse_i64(field[0], raw_user) || !parse_i64(field[1], raw_item) ||
        !parse_f64(field[2], rating) || !parse_i64(field[3], ts))
      throw IngestError("malformed row at line " + std::to_string(ln + 1) +
                        " of " + path + ": '" + line + "'");
    if (rating < kMinRating || rating > kMaxRating) {
      ++data.rejected_rows;
      continue;
    }
    data.interactions.push_back(make_interaction(
        data.users.densify(raw_user), data.items.densify(raw_item), rating, ts));
  }
  std::stable_sort(data.interactions.begin(), data.interactions.end(),
                   [](const Interaction& a, const Interaction& b) {
                     return a.timestamp < b.timestamp;
                   });
  return data;
}

Dataset synth_stream(std::size_t users, std::size_t items, std::size_t interactions,
                     double popularity_exponent, std::uint64_t seed) {
  if (users < 1 || items < 1 || interactions < 1)
    throw ConfigError("synth_stream: all counts must be >= 1");
  Rng root(seed);
  Rng perm_rng = root.fork(1);
  Rng latent_rng = root.fork(2);
  Rng draw_rng = root.fork(3);

  // rank -> entity id, randomized so popularity is independent of id order
  auto permutation = [&](std::size_t n) {
    std::vector<std::uint32_t> p(n);
    std::iota(p.begin(), p.end(), 0u);
    for (std::size_t i = n; i > 1; --i)
      std::swap(p[i - 1], p[perm_rng.index(i)]);
    return p;
  };
  const auto user_of_rank = permutation(users);
  const auto item_of_rank = permutation(items);

  auto zipf_cdf = [&](std::size_t n) {
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += std::pow(static_cast<double>(i + 1), -popularity_exponent);
      cdf[i] = acc;
    }
    for (double& v : cdf) v /= acc;
    return cdf;
  };
  const auto user_cdf = zipf_cdf(users);
  const auto item_cdf = zipf_cdf(items);

  constexpr std::size_t kLatentDim = 4;
  auto latents = [&](std::size_t n) {
    std::vector<double> l(n * kLatentDim);
    for (double& v : l) v = latent_rng.normal();
    return l;
  };
  const auto user_latent = latents(users);
  const auto item_latent = latents(items);

  auto sample_rank = [&](const std::vector<double>& cdf) {
    const double u = draw_rng.uniform();
    return static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  Dataset data;
  data.interactions.reserve(interactions);
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(kLatentDim));
  for (std::size_t i = 0; i < interactions; ++i) {
    const std::uint32_t u = user_of_rank[std::min(sample_rank(user_cdf), users - 1)];
    const std::uint32_t v = item_of_rank[std::min(sample_rank(item_cdf), items - 1)];
    double dot = 0.0;
    for (std::size_t k = 0; k < kLatentDim; ++k)
      dot += user_latent[u * kLatentDim + k] * item_latent[v * kLatentDim + k];
    const double raw = 3.5 + 1.2 * dot * inv_sqrt_k + 0.7 * draw_rng.normal();
    const double rating = std::clamp(std::floor(raw + 0.5), 1.0, 5.0);
    data.interactions.push_back(
        make_interaction(u, v, rating, 1'000'000 + static_cast<std::int64_t>(i)));
  }
  for (std::size_t u = 0; u < users; ++u) data.users.densify(static_cast<std::int64_t>(u));
  for (std::size_t v = 0; v < items; ++v) data.items.densify(static_cast<std::int64_t>(v));
  return data;
}

StreamSplit split_stream(const std::vector<Interaction>& stream,
                         double offline_fraction) {
  if (!(offline_fraction > 0.0 && offline_fraction < 1.0))
    throw ConfigError("offline fraction must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(
      std::floor(offline_fraction * static_cast<double>(stream.size())));
  return {std::span(stream).first(cut), std::span(stream).subspan(cut)};
}

void save_cache(const std::string& path, const Dataset& data) {
  BinaryWriter w(path);
  w.u32(kCacheMagic);
  w.u32(kCacheVersion);
  w.u64(data.users.size());
  for (std::int64_t raw : data.users.raw_ids()) w.i64(raw);
  w.u64(data.items.size());
  for (std::int64_t raw : data.items.raw_ids()) w.i64(raw);
  w.u64(data.interactions.size());
  for (const Interaction& x : data.interactions) {
    w.u32(x.user);
    w.u32(x.item);
    w.f64(x.rating);
    w.i64(x.timestamp);
  }
  w.close();
}

Dataset load_cache(const std::string& path) {
  BinaryReader r(path);
  if (r.u32() != kCacheMagic) throw IngestError(path + " is not an interaction cache");
  if (r.u32() != kCacheVersion) throw IngestError(path + ": unsupported cache version");
  Dataset data;
  std::vector<std::int64_t> raw(r.u64());
  for (auto& v : raw) v = r.i64();
  data.users.restore(std::move(raw));
  raw.assign(r.u64(), 0);
  for (auto& v : raw) v = r.i64();
  data.items.restore(std::move(raw));
  data.interactions.resize(r.u64());
  for (Interaction& x : data.interactions) {
    const std::uint32_t u = r.u32();
    const std::uint32_t i = r.u32();
    const double rating = r.f64();
    x = make_interaction(u, i, rating, r.i64());
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IngestError("cannot open " + path);
    std::uint32_t magic = 0;
    probe.read(reinterpret_cast<char*>(&magic), sizeof magic);
    if (probe && magic == kCacheMagic) return load_cache(path);
  }
  return parse_csv(path);
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "userId,movieId,rating,timestamp\n";
  for (const Interaction& x : data.interactions) {
    out << data.users.raw(x.user) << ',' << data.items.raw(x.item) << ','
        << x.rating << ',' << x.timestamp << '\n';
  }
  if (!out) throw Error("write to " + path + " failed");
}

std::uint64_t stream_fingerprint(const std::vector<Interaction>& stream) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  for (const Interaction& x : stream) {
    mix(x.user);
    mix(x.item);
    std::uint64_t bits;
    std::memcpy(&bits, &x.rating, sizeof bits);
    mix(bits);
    mix(static_cast<std::uint64_t>(x.timestamp));
  }
  return h;
}

} // namespace autoemb

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace autoemb {

// One user-item event, the unit of the stream. Labels are derived from the
// rating at construction: binary_label = 1 iff rating > 3, class_label is the
// rating rounded half-up, clamped to 1..5, shifted to 0..4.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  std::uint8_t binary_label = 0;
  std::uint8_t class_label = 0;
};

std::uint8_t binary_label_for(double rating);
std::uint8_t class_label_for(double rating);
Interaction make_interaction(std::uint32_t user, std::uint32_t item, double rating,
                             std::int64_t timestamp);

// Raw id <-> dense index, one per entity class. Dense indices are contiguous
// from 0 in first-appearance order.
class IdMap {
 public:
  std::uint32_t densify(std::int64_t raw);
  std::int64_t raw(std::uint32_t dense) const { return to_raw_[dense]; }
  std::size_t size() const { return to_raw_.size(); }

  const std::vector<std::int64_t>& raw_ids() const { return to_raw_; }
  void restore(std::vector<std::int64_t> raw_ids);

 private:
  std::unordered_map<std::int64_t, std::uint32_t> to_dense_;
  std::vector<std::int64_t> to_raw_;
};

struct Dataset {
  std::vector<Interaction> interactions; // sorted by timestamp, stable on ties
  IdMap users, items;
  std::size_t rejected_rows = 0; // ratings outside [0.5, 5]
};

enum class HeaderMode { Auto, Present, Absent };

// Rating files with rows "userId,movieId,rating,timestamp". Transparently
// ungzips paths ending in .gz. Malformed rows abort with the line number;
// rows with out-of-range ratings are dropped and counted.
Dataset parse_csv(const std::string& path, HeaderMode header = HeaderMode::Auto);

// Popularity-controlled synthetic stream: users/items drawn from a Zipf-like
// distribution with the given exponent (0 = uniform), ratings from a latent
// per-entity affinity model so the prediction task is learnable.
Dataset synth_stream(std::size_t users, std::size_t items, std::size_t interactions,
                     double popularity_exponent, std::uint64_t seed);

struct StreamSplit {
  std::span<const Interaction> offline;
  std::span<const Interaction> online;
};

// Temporal prefix/suffix split at floor(fraction * size).
StreamSplit split_stream(const std::vector<Interaction>& stream,
                         double offline_fraction = 0.7);

// Versioned little-endian cache of a full dataset (id maps included).
void save_cache(const std::string& path, const Dataset& data);
Dataset load_cache(const std::string& path);

// Reads .csv/.csv.gz or a cache file, dispatching on the magic number.
Dataset load_dataset(const std::string& path);

void write_csv(const std::string& path, const Dataset& data);

// FNV-1a over the interaction sequence; identifies "the same stream" when
// comparing runs.
std::uint64_t stream_fingerprint(const std::vector<Interaction>& stream);

} // namespace autoemb

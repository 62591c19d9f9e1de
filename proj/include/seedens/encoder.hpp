#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace seedens {

// Frozen feature extraction. The hashed encoder is the default stand-in for a
// pre-trained text encoder; precomputed mode loads externally exported
// features keyed by sample_id.

struct FeatureVector {
  std::vector<double> v;

  std::size_t dim() const { return v.size(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class EncoderKind { hashed, precomputed };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::hashed;
  int d = 256;
  bool unigrams = true;
  bool bigrams = true;
  std::string embeddings_path;  // precomputed only; ignored for hashed
};

// FNV-1a, 64-bit: offset basis 14695981039346656037, prime 1099511628211.
std::uint64_t fnv1a64(std::string_view bytes);

// Signed feature hashing over unigrams/bigrams: index = h mod d, sign from
// bit 63 of h, then L2 normalization. Empty text gives the zero vector.
FeatureVector encode_hashed(std::string_view text, const EncoderConfig& config);

// Embeddings file: first line "dim=<d>", then "sample_id<TAB>v1 v2 ... vd".
std::map<std::string, FeatureVector> parse_embeddings(std::string_view text);
std::map<std::string, FeatureVector> load_embeddings(const std::string& path);

}  // namespace seedens

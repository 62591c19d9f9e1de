#include "seedens/encoder.hpp"

#include <cmath>

#include "seedens/error.hpp"
#include "seedens/io.hpp"
#include "seedens/text.hpp"

namespace seedens {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

void accumulate(std::vector<double>& v, std::string_view ngram, int d) {
  const std::uint64_t h = fnv1a64(ngram);
  const std::size_t index = static_cast<std::size_t>(h % static_cast<std::uint64_t>(d));
  const double sign = (h >> 63) ? -1.0 : 1.0;
  v[index] += sign;
}

}  // namespace

FeatureVector encode_hashed(std::string_view text, const EncoderConfig& config) {
  if (config.kind != EncoderKind::hashed) {
    throw InputError("encode_hashed: config.kind is not hashed");
  }
  if (config.d < 2) {
    throw InputError("encoder: d must be >= 2");
  }
  FeatureVector out;
  out.v.assign(static_cast<std::size_t>(config.d), 0.0);

  const auto tokens = tokenize(text);
  if (config.unigrams) {
    for (const auto& tok : tokens) accumulate(out.v, tok.text, config.d);
  }
  if (config.bigrams) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      accumulate(out.v, tokens[i - 1].text + " " + tokens[i].text, config.d);
    }
  }

  double norm_sq = 0.0;
  for (double x : out.v) norm_sq += x * x;
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : out.v) x *= inv;
  }
  return out;
}

std::map<std::string, FeatureVector> parse_embeddings(std::string_view text) {
  std::map<std::string, FeatureVector> out;
  std::size_t pos = 0;
  std::size_t rowno = 0;
  long dim = -1;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++rowno;
    if (rowno == 1) {
      if (line.substr(0, 4) != "dim=") {
        throw InputError("embeddings: first line must be 'dim=<d>'");
      }
      dim = parse_long(line.substr(4), "embeddings dim");
      if (dim < 2) throw InputError("embeddings: dim must be >= 2");
      continue;
    }
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw InputError("embeddings row " + std::to_string(rowno) + ": missing tab separator");
    }
    std::string id(line.substr(0, tab));
    if (id.empty()) {
      throw InputError("embeddings row " + std::to_string(rowno) + ": empty sample_id");
    }
    if (out.count(id)) {
      throw InputError("embeddings: duplicate sample_id '" + id + "'");
    }
    FeatureVector fv;
    std::string_view values = line.substr(tab + 1);
    std::size_t start = 0;
    while (start < values.size()) {
      while (start < values.size() && values[start] == ' ') ++start;
      if (start >= values.size()) break;
      std::size_t end = values.find(' ', start);
      if (end == std::string_view::npos) end = values.size();
      fv.v.push_back(parse_double(values.substr(start, end - start),
                                  "embeddings row " + std::to_string(rowno)));
      start = end;
    }
    if (fv.v.size() != static_cast<std::size_t>(dim)) {
      throw InputError("embeddings row " + std::to_string(rowno) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(fv.v.size()));
    }
    out.emplace(std::move(id), std::move(fv));
  }
  if (dim < 0) throw InputError("embeddings: empty file");
  return out;
}

std::map<std::string, FeatureVector> load_embeddings(const std::string& path) {
  return parse_embeddings(read_text_file(path));
}

}  // namespace seedens

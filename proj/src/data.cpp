#include "seedens/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "seedens/csv.hpp"
#include "seedens/error.hpp"
#include "seedens/io.hpp"
#include "seedens/rng.hpp"
#include "seedens/text.hpp"

namespace seedens {

namespace {

const char* const kEmotionNames[kNumEmotions] = {"happiness", "sadness", "anger",
                                                 "fear",      "disgust", "surprise"};

constexpr const char* kAnnotationHeader =
    "sample_id,annotator_id,q1,q2,q3,q4_emotion,q4_spans";

std::vector<std::string> split(std::string_view text, char delim) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      break;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

EmotionLabel require_emotion(std::string_view name, std::size_t row) {
  auto label = emotion_from_name(name);
  if (!label) {
    throw InputError("row " + std::to_string(row) + ": unknown emotion '" + std::string(name) +
                     "'");
  }
  return *label;
}

}  // namespace

const std::array<EmotionLabel, kNumEmotions>& all_emotions() {
  static const std::array<EmotionLabel, kNumEmotions> labels = {
      EmotionLabel::happiness, EmotionLabel::sadness, EmotionLabel::anger,
      EmotionLabel::fear,      EmotionLabel::disgust, EmotionLabel::surprise};
  return labels;
}

const char* emotion_name(EmotionLabel label) {
  return kEmotionNames[static_cast<int>(label)];
}

std::optional<EmotionLabel> emotion_from_name(std::string_view name) {
  for (int i = 0; i < kNumEmotions; ++i) {
    if (name == kEmotionNames[i]) return static_cast<EmotionLabel>(i);
  }
  return std::nullopt;
}

double LabelDistribution::sum() const {
  double s = 0.0;
  for (double x : p) s += x;
  return s;
}

bool LabelDistribution::is_normalized(double tol) const {
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0 + tol)) return false;
  }
  return std::abs(sum() - 1.0) <= tol;
}

LabelDistribution LabelDistribution::one_hot(EmotionLabel label) {
  LabelDistribution d;
  d.p[static_cast<int>(label)] = 1.0;
  return d;
}

LabelDistribution LabelDistribution::uniform() {
  LabelDistribution d;
  d.p.fill(1.0 / kNumEmotions);
  return d;
}

LabelDistribution LabelDistribution::from_counts(const std::array<double, kNumEmotions>& counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw InputError("negative count in label distribution");
    total += c;
  }
  if (total <= 0.0) throw InputError("cannot normalize all-zero counts");
  LabelDistribution d;
  for (int i = 0; i < kNumEmotions; ++i) d.p[i] = counts[i] / total;
  return d;
}

EmotionLabel argmax_label(const LabelDistribution& dist) {
  int best = 0;
  for (int i = 1; i < kNumEmotions; ++i) {
    if (dist.p[i] > dist.p[best]) best = i;
  }
  return static_cast<EmotionLabel>(best);
}

SampleMap parse_transcripts(std::string_view csv_text) {
  auto rows = csv::parse(csv_text);
  if (rows.empty() || csv::join_row(rows[0]) != "sample_id,transcript") {
    throw InputError("transcripts: expected header 'sample_id,transcript'");
  }
  SampleMap samples;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2) {
      throw InputError("transcripts row " + std::to_string(r + 1) + ": expected 2 fields, got " +
                       std::to_string(row.size()));
    }
    if (row[0].empty()) {
      throw InputError("transcripts row " + std::to_string(r + 1) + ": empty sample_id");
    }
    if (samples.count(row[0])) {
      throw InputError("transcripts: duplicate sample_id '" + row[0] + "'");
    }
    samples[row[0]] = Sample{row[0], row[1]};
  }
  return samples;
}

std::vector<AnnotationRecord> parse_annotations(std::string_view csv_text,
                                                const SampleMap& samples) {
  auto rows = csv::parse(csv_text);
  if (rows.empty() || csv::join_row(rows[0]) != kAnnotationHeader) {
    throw InputError(std::string("annotations: expected header '") + kAnnotationHeader + "'");
  }
  std::vector<AnnotationRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t rowno = r + 1;
    if (row.size() != 7) {
      throw InputError("row " + std::to_string(rowno) + ": expected 7 fields, got " +
                       std::to_string(row.size()));
    }
    AnnotationRecord rec;
    rec.sample_id = row[0];
    rec.annotator_id = row[1];
    if (rec.sample_id.empty()) {
      throw InputError("row " + std::to_string(rowno) + ": empty sample_id");
    }
    if (rec.annotator_id.empty()) {
      throw InputError("row " + std::to_string(rowno) + ": empty annotator_id");
    }
    auto it = samples.find(rec.sample_id);
    if (it == samples.end()) {
      throw InputError("row " + std::to_string(rowno) + ": unknown sample_id '" + rec.sample_id +
                       "'");
    }
    if (row[2] == "yes") {
      rec.q1_any_emotion = true;
    } else if (row[2] == "no") {
      rec.q1_any_emotion = false;
    } else {
      throw InputError("row " + std::to_string(rowno) + ": q1 must be yes or no, got '" + row[2] +
                       "'");
    }
    rec.q2_primary = require_emotion(row[3], rowno);
    if (!row[4].empty()) {
      for (const auto& tok : split(row[4], ';')) {
        rec.q3_all_present.insert(require_emotion(tok, rowno));
      }
    }
    if (!row[5].empty()) {
      rec.q4_emotion = require_emotion(row[5], rowno);
    }
    if (!row[6].empty()) {
      const std::size_t transcript_len = codepoint_length(it->second.transcript);
      std::vector<Span> spans;
      for (const auto& tok : split(row[6], ';')) {
        auto dash = tok.find('-');
        if (dash == std::string::npos) {
          throw InputError("row " + std::to_string(rowno) + ": malformed span '" + tok + "'");
        }
        const std::string ctx = "row " + std::to_string(rowno) + " span";
        long begin = parse_long(std::string_view(tok).substr(0, dash), ctx);
        long end = parse_long(std::string_view(tok).substr(dash + 1), ctx);
        if (begin < 0 || end <= begin || static_cast<std::size_t>(end) > transcript_len) {
          throw InputError("span " + tok + " out of bounds for sample '" + rec.sample_id +
                           "' (transcript length " + std::to_string(transcript_len) + ")");
        }
        spans.push_back(Span{static_cast<std::size_t>(begin), static_cast<std::size_t>(end)});
      }
      rec.q4_spans = std::move(spans);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string format_annotations(const std::vector<AnnotationRecord>& records) {
  std::string out = kAnnotationHeader;
  out.push_back('\n');
  for (const auto& rec : records) {
    std::vector<std::string> fields;
    fields.push_back(rec.sample_id);
    fields.push_back(rec.annotator_id);
    fields.push_back(rec.q1_any_emotion ? "yes" : "no");
    fields.push_back(emotion_name(rec.q2_primary));
    std::string q3;
    for (auto label : rec.q3_all_present) {  // set keeps canonical order
      if (!q3.empty()) q3.push_back(';');
      q3 += emotion_name(label);
    }
    fields.push_back(q3);
    fields.push_back(rec.q4_emotion ? emotion_name(*rec.q4_emotion) : "");
    std::string spans;
    if (rec.q4_spans) {
      for (const auto& span : *rec.q4_spans) {
        if (!spans.empty()) spans.push_back(';');
        spans += std::to_string(span.begin) + "-" + std::to_string(span.end);
      }
    }
    fields.push_back(spans);
    out += csv::join_row(fields);
    out.push_back('\n');
  }
  return out;
}

namespace {

std::string gold_header(bool full) {
  std::string header = "sample_id,gold";
  if (full) {
    for (auto label : all_emotions()) header += std::string(",p_") + emotion_name(label);
    header += ",disagreement,tie_flag";
  }
  return header;
}

}  // namespace

std::string format_gold(const std::vector<LabeledExample>& examples) {
  std::string out = gold_header(true);
  out.push_back('\n');
  for (const auto& e : examples) {
    if (!e.true_dist || !e.disagreement) {
      throw InputError("format_gold: sample '" + e.sample_id +
                       "' lacks a rating distribution or disagreement value");
    }
    std::vector<std::string> fields;
    fields.push_back(e.sample_id);
    fields.push_back(emotion_name(e.gold));
    for (int i = 0; i < kNumEmotions; ++i) fields.push_back(format_double(e.true_dist->p[i]));
    fields.push_back(format_double(*e.disagreement));
    fields.push_back(e.tie_flag ? "true" : "false");
    out += csv::join_row(fields);
    out.push_back('\n');
  }
  return out;
}

std::vector<LabeledExample> parse_gold(std::string_view csv_text) {
  auto rows = csv::parse(csv_text);
  if (rows.empty()) throw InputError("gold: missing header");
  const std::string header = csv::join_row(rows[0]);
  bool full;
  if (header == gold_header(true)) {
    full = true;
  } else if (header == gold_header(false)) {
    full = false;
  } else {
    throw InputError("gold: expected header '" + gold_header(true) + "' or '" +
                     gold_header(false) + "'");
  }
  const std::size_t want = full ? 10 : 2;
  std::vector<LabeledExample> examples;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t rowno = r + 1;
    if (row.size() != want) {
      throw InputError("gold row " + std::to_string(rowno) + ": expected " +
                       std::to_string(want) + " fields, got " + std::to_string(row.size()));
    }
    if (row[0].empty()) {
      throw InputError("gold row " + std::to_string(rowno) + ": empty sample_id");
    }
    if (!seen.insert(row[0]).second) {
      throw InputError("gold: duplicate sample_id '" + row[0] + "'");
    }
    LabeledExample e;
    e.sample_id = row[0];
    e.gold = require_emotion(row[1], rowno);
    if (full) {
      LabelDistribution dist;
      const std::string ctx = "gold row " + std::to_string(rowno);
      for (int i = 0; i < kNumEmotions; ++i) {
        dist.p[i] = parse_double(row[static_cast<std::size_t>(i) + 2], ctx);
      }
      if (!dist.is_normalized(1e-6)) {
        throw InputError(ctx + ": rating distribution does not sum to 1");
      }
      e.true_dist = dist;
      e.disagreement = parse_double(row[8], ctx);
      if (row[9] == "true") {
        e.tie_flag = true;
      } else if (row[9] == "false") {
        e.tie_flag = false;
      } else {
        throw InputError(ctx + ": tie_flag must be true or false, got '" + row[9] + "'");
      }
    }
    examples.push_back(std::move(e));
  }
  return examples;
}

double normalized_entropy(const LabelDistribution& dist) {
  double h = 0.0;
  for (double p : dist.p) {
    if (p > 0.0) h -= p * std::log(p);
  }
  h /= std::log(static_cast<double>(kNumEmotions));
  return std::clamp(h, 0.0, 1.0);
}

LabeledExample aggregate_gold(const std::vector<AnnotationRecord>& records) {
  if (records.empty()) {
    throw InputError("aggregate_gold: no records");
  }
  const std::string& sample_id = records.front().sample_id;
  std::array<double, kNumEmotions> counts{};
  for (const auto& rec : records) {
    if (rec.sample_id != sample_id) {
      throw InputError("aggregate_gold: mixed sample_ids '" + sample_id + "' and '" +
                       rec.sample_id + "'");
    }
    counts[static_cast<int>(rec.q2_primary)] += 1.0;
  }
  LabeledExample out;
  out.sample_id = sample_id;
  out.true_dist = LabelDistribution::from_counts(counts);
  out.disagreement = normalized_entropy(*out.true_dist);

  double max_count = *std::max_element(counts.begin(), counts.end());
  int winners = 0;
  int gold = 0;
  for (int i = 0; i < kNumEmotions; ++i) {
    if (counts[i] == max_count) {
      if (winners == 0) gold = i;
      ++winners;
    }
  }
  out.gold = static_cast<EmotionLabel>(gold);
  out.tie_flag = winners >= 2;
  return out;
}

std::vector<FoldAssignment> make_folds(const std::vector<std::string>& sample_ids, int k,
                                       int repeats, std::uint64_t seed) {
  if (k < 2) throw InputError("make_folds: k must be >= 2");
  if (repeats < 1) throw InputError("make_folds: repeats must be >= 1");
  if (sample_ids.size() < static_cast<std::size_t>(k)) {
    throw InputError("make_folds: need at least k=" + std::to_string(k) + " samples, got " +
                     std::to_string(sample_ids.size()));
  }
  std::set<std::string> unique(sample_ids.begin(), sample_ids.end());
  if (unique.size() != sample_ids.size()) {
    throw InputError("make_folds: sample_ids contain duplicates");
  }

  std::vector<FoldAssignment> folds;
  folds.reserve(static_cast<std::size_t>(k) * repeats);
  for (int rep = 0; rep < repeats; ++rep) {
    std::vector<std::string> shuffled = sample_ids;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    rng.shuffle(shuffled);
    std::vector<FoldAssignment> per_repeat(k);
    for (int f = 0; f < k; ++f) {
      per_repeat[f].repeat_index = rep;
      per_repeat[f].fold_index = f;
    }
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      per_repeat[i % k].sample_ids.push_back(std::move(shuffled[i]));
    }
    for (auto& fold : per_repeat) folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace seedens

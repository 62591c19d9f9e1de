#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace seedens {

inline constexpr int kNumEmotions = 6;

// Canonical order. The index doubles as the tie-break order everywhere:
// whenever two labels score equally, the lower index wins.
enum class EmotionLabel : int {
  happiness = 0,
  sadness = 1,
  anger = 2,
  fear = 3,
  disgust = 4,
  surprise = 5,
};

const std::array<EmotionLabel, kNumEmotions>& all_emotions();
const char* emotion_name(EmotionLabel label);
std::optional<EmotionLabel> emotion_from_name(std::string_view name);

struct Sample {
  std::string sample_id;
  std::string transcript;
};

// Half-open character range [begin, end) in code points.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

// One annotator's survey answers for one sample, ingested verbatim.
// q2 may contradict q3; that is the annotator's business, not ours.
struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  bool q1_any_emotion = false;
  EmotionLabel q2_primary = EmotionLabel::happiness;
  std::set<EmotionLabel> q3_all_present;
  std::optional<EmotionLabel> q4_emotion;
  std::optional<std::vector<Span>> q4_spans;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// Probability vector over the six emotions.
struct LabelDistribution {
  std::array<double, kNumEmotions> p{};

  double& operator[](std::size_t i) { return p[i]; }
  double operator[](std::size_t i) const { return p[i]; }

  double sum() const;
  bool is_normalized(double tol = 1e-9) const;

  static LabelDistribution one_hot(EmotionLabel label);
  static LabelDistribution uniform();
  // Normalizes non-negative counts; throws InputError when the total is zero.
  static LabelDistribution from_counts(const std::array<double, kNumEmotions>& counts);

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;
};

// First index attaining the maximum, i.e. canonical-order tie-break.
EmotionLabel argmax_label(const LabelDistribution& dist);

struct LabeledExample {
  std::string sample_id;
  EmotionLabel gold = EmotionLabel::happiness;
  std::optional<LabelDistribution> true_dist;
  std::optional<double> disagreement;
  bool tie_flag = false;
};

struct FoldAssignment {
  int repeat_index = 0;
  int fold_index = 0;
  std::vector<std::string> sample_ids;
};

using SampleMap = std::map<std::string, Sample>;

// Transcripts CSV: header "sample_id,transcript", RFC-4180 quoting.
SampleMap parse_transcripts(std::string_view csv_text);

// Annotations CSV: header
//   sample_id,annotator_id,q1,q2,q3,q4_emotion,q4_spans
// q1 in {yes,no}; q2/q4_emotion are the lowercase Ekman names; q3 is
// semicolon-separated names; q4_spans semicolon-separated "start-end" pairs.
// Spans are validated against the transcript's code-point length.
std::vector<AnnotationRecord> parse_annotations(std::string_view csv_text,
                                                const SampleMap& samples);

// Inverse of parse_annotations; parse(format(r)) == r.
std::string format_annotations(const std::vector<AnnotationRecord>& records);

// Gold-label CSV. Full header:
//   sample_id,gold,p_happiness,...,p_surprise,disagreement,tie_flag
// parse_gold also accepts the minimal header "sample_id,gold", in which case
// true_dist and disagreement stay unset.
std::string format_gold(const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> parse_gold(std::string_view csv_text);

// -sum p ln p / ln 6 over nonzero entries, clamped to [0,1].
double normalized_entropy(const LabelDistribution& dist);

// Plurality vote over q2 with canonical-order tie-break; true_dist is the
// normalized vote histogram and disagreement its normalized entropy.
LabeledExample aggregate_gold(const std::vector<AnnotationRecord>& records);

// k folds per repeat, sizes differing by at most one, each repeat shuffled
// independently from (seed, repeat_index). Returns k * repeats assignments.
std::vector<FoldAssignment> make_folds(const std::vector<std::string>& sample_ids,
                                       int k, int repeats, std::uint64_t seed);

}  // namespace seedens

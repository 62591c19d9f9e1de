#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "seedens/data.hpp"

namespace seedens {

// Inter-rater agreement statistics: pairwise Cohen's kappa, its multi-rater
// average, the per-emotion binary reduction for the multi-select question,
// and highlight-span overlap for the evidence question.

struct RatingMatrix {
  std::vector<std::string> rater_ids;                   // columns
  std::vector<std::string> item_ids;                    // rows
  std::vector<std::vector<std::optional<int>>> ratings; // [item][rater]
  int n_categories = 0;
};

struct KappaResult {
  std::optional<double> value;  // in [-1, 1] when defined
  bool defined = false;
  long n_pairs_used = 0;
};

// kappa = (p_o - p_e) / (1 - p_e) over indices rated by both. p_e comes from
// the per-rater marginals. Undefined when p_e = 1 (both raters constant on
// the same category) or nothing is co-rated; n_pairs_used counts co-rated
// items here.
KappaResult cohen_kappa_pair(const std::vector<std::optional<int>>& r1,
                             const std::vector<std::optional<int>>& r2);

// Mean of cohen_kappa_pair over all rater pairs with a defined value;
// n_pairs_used counts contributing pairs.
KappaResult avg_pairwise_kappa(const RatingMatrix& matrix);

struct MultilabelKappa {
  std::array<KappaResult, kNumEmotions> per_emotion;
  KappaResult mean;  // over emotions with a defined kappa
};

// Binary per-emotion reduction of q3 (selected vs not), averaged.
MultilabelKappa multilabel_kappa(const std::vector<AnnotationRecord>& records);

// Matrix builders; items and raters are sorted by id for determinism.
// A duplicate (sample, annotator) pair is an input error.
RatingMatrix rating_matrix_q1(const std::vector<AnnotationRecord>& records);
RatingMatrix rating_matrix_q2(const std::vector<AnnotationRecord>& records);
RatingMatrix rating_matrix_q3(const std::vector<AnnotationRecord>& records, EmotionLabel emotion);

struct OverlapPair {
  std::string sample_id;
  std::string annotator_a;
  std::string annotator_b;
  bool same_emotion = false;
  double jaccard = 0.0;
};

struct OverlapReport {
  std::vector<OverlapPair> pairs;
  std::optional<double> mean_same_emotion;
  std::optional<double> mean_different_emotion;
  long n_same = 0;
  long n_different = 0;
};

// Spans become token index sets via the encoder's tokenizer (a span covers a
// token iff it overlaps at least one of its characters); pairs of annotators
// with q4 spans on the same sample are compared by Jaccard overlap, grouped
// by whether their q4 emotions match.
OverlapReport highlight_overlap(const std::vector<AnnotationRecord>& records,
                                const SampleMap& samples);

}  // namespace seedens

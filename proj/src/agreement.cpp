#include "seedens/agreement.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "seedens/error.hpp"
#include "seedens/text.hpp"

namespace seedens {

KappaResult cohen_kappa_pair(const std::vector<std::optional<int>>& r1,
                             const std::vector<std::optional<int>>& r2) {
  if (r1.size() != r2.size()) throw InputError("cohen_kappa_pair: length mismatch");
  KappaResult result;
  std::map<int, double> m1, m2;
  long n = 0;
  long agree = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    if (!r1[i] || !r2[i]) continue;
    ++n;
    if (*r1[i] == *r2[i]) ++agree;
    m1[*r1[i]] += 1.0;
    m2[*r2[i]] += 1.0;
  }
  result.n_pairs_used = n;
  if (n == 0) return result;
  const double p_o = static_cast<double>(agree) / static_cast<double>(n);
  double p_e = 0.0;
  for (const auto& [cat, count1] : m1) {
    auto it = m2.find(cat);
    if (it == m2.end()) continue;
    p_e += (count1 / static_cast<double>(n)) * (it->second / static_cast<double>(n));
  }
  if (p_e == 1.0) return result;  // both raters constant on the same category
  result.defined = true;
  result.value = (p_o - p_e) / (1.0 - p_e);
  return result;
}

KappaResult avg_pairwise_kappa(const RatingMatrix& matrix) {
  if (matrix.rater_ids.size() < 2) {
    throw InputError("avg_pairwise_kappa: need at least 2 raters");
  }
  KappaResult result;
  double total = 0.0;
  for (std::size_t a = 0; a < matrix.rater_ids.size(); ++a) {
    for (std::size_t b = a + 1; b < matrix.rater_ids.size(); ++b) {
      std::vector<std::optional<int>> ra, rb;
      ra.reserve(matrix.ratings.size());
      rb.reserve(matrix.ratings.size());
      for (const auto& row : matrix.ratings) {
        ra.push_back(row[a]);
        rb.push_back(row[b]);
      }
      const auto pair = cohen_kappa_pair(ra, rb);
      if (pair.defined) {
        total += *pair.value;
        result.n_pairs_used += 1;
      }
    }
  }
  if (result.n_pairs_used == 0) return result;
  result.defined = true;
  result.value = total / static_cast<double>(result.n_pairs_used);
  return result;
}

namespace {

struct Grid {
  std::vector<std::string> raters;
  std::vector<std::string> items;
  std::map<std::string, std::size_t> rater_index;
  std::map<std::string, std::size_t> item_index;
};

Grid build_grid(const std::vector<AnnotationRecord>& records) {
  std::set<std::string> raters, items;
  for (const auto& r : records) {
    raters.insert(r.annotator_id);
    items.insert(r.sample_id);
  }
  Grid grid;
  grid.raters.assign(raters.begin(), raters.end());
  grid.items.assign(items.begin(), items.end());
  for (std::size_t i = 0; i < grid.raters.size(); ++i) grid.rater_index[grid.raters[i]] = i;
  for (std::size_t i = 0; i < grid.items.size(); ++i) grid.item_index[grid.items[i]] = i;
  return grid;
}

template <typename RateFn>
RatingMatrix build_matrix(const std::vector<AnnotationRecord>& records, int n_categories,
                          RateFn rate) {
  const Grid grid = build_grid(records);
  RatingMatrix matrix;
  matrix.rater_ids = grid.raters;
  matrix.item_ids = grid.items;
  matrix.n_categories = n_categories;
  matrix.ratings.assign(grid.items.size(),
                        std::vector<std::optional<int>>(grid.raters.size()));
  for (const auto& r : records) {
    auto& cell = matrix.ratings[grid.item_index.at(r.sample_id)][grid.rater_index.at(r.annotator_id)];
    if (cell) {
      throw InputError("duplicate annotation for sample '" + r.sample_id + "' by annotator '" +
                       r.annotator_id + "'");
    }
    cell = rate(r);
  }
  return matrix;
}

}  // namespace

RatingMatrix rating_matrix_q1(const std::vector<AnnotationRecord>& records) {
  return build_matrix(records, 2,
                      [](const AnnotationRecord& r) { return r.q1_any_emotion ? 1 : 0; });
}

RatingMatrix rating_matrix_q2(const std::vector<AnnotationRecord>& records) {
  return build_matrix(records, kNumEmotions,
                      [](const AnnotationRecord& r) { return static_cast<int>(r.q2_primary); });
}

RatingMatrix rating_matrix_q3(const std::vector<AnnotationRecord>& records, EmotionLabel emotion) {
  return build_matrix(records, 2, [emotion](const AnnotationRecord& r) {
    return r.q3_all_present.count(emotion) ? 1 : 0;
  });
}

MultilabelKappa multilabel_kappa(const std::vector<AnnotationRecord>& records) {
  MultilabelKappa out;
  double total = 0.0;
  for (int e = 0; e < kNumEmotions; ++e) {
    const auto matrix = rating_matrix_q3(records, static_cast<EmotionLabel>(e));
    out.per_emotion[e] = avg_pairwise_kappa(matrix);
    if (out.per_emotion[e].defined) {
      total += *out.per_emotion[e].value;
      out.mean.n_pairs_used += 1;  // emotions contributing to the mean
    }
  }
  if (out.mean.n_pairs_used > 0) {
    out.mean.defined = true;
    out.mean.value = total / static_cast<double>(out.mean.n_pairs_used);
  }
  return out;
}

namespace {

// Token indices whose [begin, end) overlaps any of the spans.
std::set<std::size_t> covered_tokens(const std::vector<Token>& tokens,
                                     const std::vector<Span>& spans) {
  std::set<std::size_t> covered;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& span : spans) {
      if (tokens[i].begin < span.end && span.begin < tokens[i].end) {
        covered.insert(i);
        break;
      }
    }
  }
  return covered;
}

double jaccard(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  if (a.empty() && b.empty()) return 1.0;  // two empty highlights agree vacuously
  std::size_t inter = 0;
  for (auto v : a) inter += b.count(v);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

OverlapReport highlight_overlap(const std::vector<AnnotationRecord>& records,
                                const SampleMap& samples) {
  // Group q4 answers per sample, in annotator order for stable pair listing.
  std::map<std::string, std::vector<const AnnotationRecord*>> by_sample;
  for (const auto& r : records) {
    if (!r.q4_emotion || !r.q4_spans) continue;
    by_sample[r.sample_id].push_back(&r);
  }
  OverlapReport report;
  double total_same = 0.0;
  double total_diff = 0.0;
  for (auto& [sample_id, recs] : by_sample) {
    if (recs.size() < 2) continue;
    std::sort(recs.begin(), recs.end(), [](const AnnotationRecord* a, const AnnotationRecord* b) {
      return a->annotator_id < b->annotator_id;
    });
    auto sample_it = samples.find(sample_id);
    if (sample_it == samples.end()) {
      throw InputError("highlight_overlap: no transcript for sample '" + sample_id + "'");
    }
    const auto tokens = tokenize(sample_it->second.transcript);
    std::vector<std::set<std::size_t>> covered(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      covered[i] = covered_tokens(tokens, *recs[i]->q4_spans);
    }
    for (std::size_t a = 0; a < recs.size(); ++a) {
      for (std::size_t b = a + 1; b < recs.size(); ++b) {
        OverlapPair pair;
        pair.sample_id = sample_id;
        pair.annotator_a = recs[a]->annotator_id;
        pair.annotator_b = recs[b]->annotator_id;
        pair.same_emotion = *recs[a]->q4_emotion == *recs[b]->q4_emotion;
        pair.jaccard = jaccard(covered[a], covered[b]);
        if (pair.same_emotion) {
          total_same += pair.jaccard;
          report.n_same += 1;
        } else {
          total_diff += pair.jaccard;
          report.n_different += 1;
        }
        report.pairs.push_back(std::move(pair));
      }
    }
  }
  if (report.n_same > 0) report.mean_same_emotion = total_same / static_cast<double>(report.n_same);
  if (report.n_different > 0) {
    report.mean_different_emotion = total_diff / static_cast<double>(report.n_different);
  }
  return report;
}

}  // namespace seedens

#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "seedens/data.hpp"
#include "seedens/error.hpp"

using namespace seedens;

TEST_CASE("emotion names round-trip in canonical order") {
  const char* expected[] = {"happiness", "sadness", "anger", "fear", "disgust", "surprise"};
  const auto& all = all_emotions();
  for (int i = 0; i < kNumEmotions; ++i) {
    CHECK(static_cast<int>(all[i]) == i);
    CHECK(std::string(emotion_name(all[i])) == expected[i]);
    CHECK(emotion_from_name(expected[i]) == all[i]);
  }
  CHECK(!emotion_from_name("joy").has_value());
  CHECK(!emotion_from_name("Happiness").has_value());
}

TEST_CASE("label distribution basics") {
  const auto h = LabelDistribution::one_hot(EmotionLabel::fear);
  CHECK(h[3] == 1.0);
  CHECK(h.sum() == doctest::Approx(1.0));
  CHECK(h.is_normalized());

  const auto u = LabelDistribution::uniform();
  for (int i = 0; i < kNumEmotions; ++i) CHECK(u[i] == doctest::Approx(1.0 / 6.0));

  const auto d = LabelDistribution::from_counts({2, 0, 2, 0, 1, 0});
  CHECK(d[0] == doctest::Approx(0.4));
  CHECK(d[2] == doctest::Approx(0.4));
  CHECK(d[4] == doctest::Approx(0.2));
  CHECK_THROWS_AS(LabelDistribution::from_counts({0, 0, 0, 0, 0, 0}), InputError);
  CHECK_THROWS_AS(LabelDistribution::from_counts({1, -1, 0, 0, 0, 0}), InputError);
}

TEST_CASE("argmax ties resolve to the lower index") {
  LabelDistribution d;
  d[1] = 0.4;
  d[3] = 0.4;
  d[5] = 0.2;
  CHECK(argmax_label(d) == EmotionLabel::sadness);
  CHECK(argmax_label(LabelDistribution::uniform()) == EmotionLabel::happiness);
}

TEST_CASE("normalized entropy") {
  CHECK(normalized_entropy(LabelDistribution::one_hot(EmotionLabel::anger)) == 0.0);
  CHECK(normalized_entropy(LabelDistribution::uniform()) == doctest::Approx(1.0));
  LabelDistribution d;
  d[0] = 0.4;
  d[2] = 0.4;
  d[4] = 0.2;
  CHECK(normalized_entropy(d) == doctest::Approx(0.588762155916294).epsilon(1e-12));
}

TEST_CASE("transcripts parsing") {
  const auto samples = parse_transcripts("sample_id,transcript\ns1,\"Hello, world\"\ns2,ok\n");
  REQUIRE(samples.size() == 2);
  CHECK(samples.at("s1").transcript == "Hello, world");
  CHECK(samples.at("s2").transcript == "ok");

  CHECK_THROWS_AS(parse_transcripts("id,text\ns1,x\n"), InputError);
  CHECK_THROWS_AS(parse_transcripts("sample_id,transcript\ns1,x\ns1,y\n"), InputError);
}

static SampleMap tiny_samples() {
  return parse_transcripts("sample_id,transcript\ns1,one two three four\n");
}

TEST_CASE("annotations round-trip") {
  std::vector<AnnotationRecord> recs;
  AnnotationRecord a;
  a.sample_id = "s1";
  a.annotator_id = "A";
  a.q1_any_emotion = true;
  a.q2_primary = EmotionLabel::anger;
  a.q3_all_present = {EmotionLabel::anger, EmotionLabel::disgust};
  a.q4_emotion = EmotionLabel::anger;
  a.q4_spans = std::vector<Span>{{0, 3}, {8, 13}};
  recs.push_back(a);

  AnnotationRecord b;
  b.sample_id = "s1";
  b.annotator_id = "B";
  b.q1_any_emotion = false;
  b.q2_primary = EmotionLabel::happiness;
  recs.push_back(b);

  const auto parsed = parse_annotations(format_annotations(recs), tiny_samples());
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == recs[0]);
  CHECK(parsed[1] == recs[1]);
}

TEST_CASE("annotations reject malformed input") {
  const auto samples = tiny_samples();
  const std::string header = "sample_id,annotator_id,q1,q2,q3,q4_emotion,q4_spans\n";
  CHECK_THROWS_AS(parse_annotations(header + "s1,A,maybe,anger,anger,,\n", samples), InputError);
  CHECK_THROWS_AS(parse_annotations(header + "s1,A,yes,rage,anger,,\n", samples), InputError);
  CHECK_THROWS_AS(parse_annotations(header + "s9,A,yes,anger,anger,,\n", samples), InputError);
  CHECK_THROWS_AS(parse_annotations(header + "s1,A,yes,anger,anger,anger,0-99\n", samples),
                  InputError);
  CHECK_THROWS_AS(parse_annotations(header + "s1,A,yes,anger,anger,anger,5\n", samples),
                  InputError);
}

TEST_CASE("aggregate_gold takes the plurality with lowest-index ties") {
  auto rec = [](const char* who, EmotionLabel q2) {
    AnnotationRecord r;
    r.sample_id = "s1";
    r.annotator_id = who;
    r.q1_any_emotion = true;
    r.q2_primary = q2;
    r.q3_all_present = {q2};
    return r;
  };
  const std::vector<AnnotationRecord> recs = {
      rec("A", EmotionLabel::anger),    rec("B", EmotionLabel::anger),
      rec("C", EmotionLabel::happiness), rec("D", EmotionLabel::happiness),
      rec("E", EmotionLabel::disgust),
  };
  const auto ex = aggregate_gold(recs);
  CHECK(ex.sample_id == "s1");
  CHECK(ex.gold == EmotionLabel::happiness);
  CHECK(ex.tie_flag);
  REQUIRE(ex.true_dist.has_value());
  CHECK((*ex.true_dist)[0] == doctest::Approx(0.4));
  CHECK((*ex.true_dist)[2] == doctest::Approx(0.4));
  CHECK((*ex.true_dist)[4] == doctest::Approx(0.2));
  REQUIRE(ex.disagreement.has_value());
  CHECK(*ex.disagreement == doctest::Approx(0.588762155916294).epsilon(1e-12));

  const auto unanimous = aggregate_gold({rec("A", EmotionLabel::fear), rec("B", EmotionLabel::fear)});
  CHECK(unanimous.gold == EmotionLabel::fear);
  CHECK(!unanimous.tie_flag);
  CHECK(*unanimous.disagreement == 0.0);

  CHECK_THROWS_AS(aggregate_gold({}), InputError);
  auto other = rec("F", EmotionLabel::fear);
  other.sample_id = "s2";
  CHECK_THROWS_AS(aggregate_gold({rec("A", EmotionLabel::fear), other}), InputError);
}

TEST_CASE("gold csv round-trips both header forms") {
  LabeledExample full;
  full.sample_id = "s1";
  full.gold = EmotionLabel::sadness;
  LabelDistribution d;
  d[1] = 0.75;
  d[4] = 0.25;
  full.true_dist = d;
  full.disagreement = 0.3125;
  full.tie_flag = true;

  const auto parsed = parse_gold(format_gold({full}));
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].sample_id == "s1");
  CHECK(parsed[0].gold == EmotionLabel::sadness);
  REQUIRE(parsed[0].true_dist.has_value());
  CHECK((*parsed[0].true_dist)[1] == doctest::Approx(0.75));
  CHECK(parsed[0].disagreement == doctest::Approx(0.3125));
  CHECK(parsed[0].tie_flag);

  const auto minimal = parse_gold("sample_id,gold\ns1,anger\ns2,surprise\n");
  REQUIRE(minimal.size() == 2);
  CHECK(minimal[0].gold == EmotionLabel::anger);
  CHECK(!minimal[0].true_dist.has_value());
  CHECK(!minimal[0].disagreement.has_value());

  LabeledExample bare;
  bare.sample_id = "s1";
  CHECK_THROWS_AS(format_gold({bare}), InputError);
  CHECK_THROWS_AS(parse_gold("sample_id,gold\ns1,anger\ns1,fear\n"), InputError);
  const std::string full_header =
      "sample_id,gold,p_happiness,p_sadness,p_anger,p_fear,p_disgust,p_surprise,"
      "disagreement,tie_flag\n";
  CHECK_THROWS_AS(parse_gold(full_header + "s1,anger,0.9,0.9,0,0,0,0,0.1,false\n"), InputError);
}

TEST_CASE("make_folds partitions evenly and deterministically") {
  std::vector<std::string> ids;
  for (int i = 0; i < 23; ++i) ids.push_back("s" + std::to_string(i));

  const auto folds = make_folds(ids, 5, 2, 99);
  REQUIRE(folds.size() == 10);
  for (int rep = 0; rep < 2; ++rep) {
    std::set<std::string> seen;
    for (int f = 0; f < 5; ++f) {
      const auto& cell = folds[rep * 5 + f];
      CHECK(cell.repeat_index == rep);
      CHECK(cell.fold_index == f);
      CHECK(cell.sample_ids.size() >= 4);
      CHECK(cell.sample_ids.size() <= 5);
      seen.insert(cell.sample_ids.begin(), cell.sample_ids.end());
    }
    CHECK(seen.size() == ids.size());
  }

  const auto again = make_folds(ids, 5, 2, 99);
  for (std::size_t i = 0; i < folds.size(); ++i) CHECK(folds[i].sample_ids == again[i].sample_ids);

  CHECK(folds[0].sample_ids != folds[5].sample_ids);

  CHECK_THROWS_AS(make_folds(ids, 1, 1, 0), InputError);
  CHECK_THROWS_AS(make_folds(ids, 5, 0, 0), InputError);
  CHECK_THROWS_AS(make_folds({"a", "b"}, 5, 1, 0), InputError);
  CHECK_THROWS_AS(make_folds({"a", "a", "b", "c", "d"}, 2, 1, 0), InputError);
}

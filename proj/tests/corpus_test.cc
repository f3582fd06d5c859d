/*
 * Copyright 2026 The PSA Audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psa/corpus.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "psa/errors.h"
#include "psa/random.h"
#include "psa/tokenize.h"

namespace psa {
namespace {

TEST(LoadCorpusTest, PlainLinesGetSynthesizedIds) {
  const LoadResult r = ParseCorpus("one\ntwo\nthree\n", "c.txt",
                                   CorpusFormat::kPlainLines);
  ASSERT_EQ(r.comments.size(), 3u);
  EXPECT_EQ(r.comments[0].id, "c.txt:1");
  EXPECT_EQ(r.comments[1].id, "c.txt:2");
  EXPECT_EQ(r.comments[2].id, "c.txt:3");
  EXPECT_EQ(r.comments[2].text, "three");
}

TEST(LoadCorpusTest, PlainLinesSkipBlankLinesButKeepLineNumbers) {
  const LoadResult r =
      ParseCorpus("one\r\n\n  \nfour", "c.txt", CorpusFormat::kPlainLines);
  ASSERT_EQ(r.comments.size(), 2u);
  EXPECT_EQ(r.comments[0].text, "one");
  EXPECT_EQ(r.comments[1].id, "c.txt:4");
}

TEST(LoadCorpusTest, JsonlPassesFieldsThrough) {
  const LoadResult r = ParseCorpus(R"({"id":"a","text":"She won."})", "c.jsonl",
                                   CorpusFormat::kJsonl);
  ASSERT_EQ(r.comments.size(), 1u);
  EXPECT_EQ(r.comments[0].id, "a");
  EXPECT_EQ(r.comments[0].text, "She won.");
}

TEST(LoadCorpusTest, JsonlMissingIdIsSynthesized) {
  const LoadResult r = ParseCorpus("{\"text\":\"x\"}\n{\"id\":7,\"text\":\"y\"}\n",
                                   "c.jsonl", CorpusFormat::kJsonl);
  ASSERT_EQ(r.comments.size(), 2u);
  EXPECT_EQ(r.comments[0].id, "c.jsonl:1");
  EXPECT_EQ(r.comments[1].id, "7");
}

TEST(LoadCorpusTest, MalformedJsonlAbortsWithLineNumber) {
  try {
    ParseCorpus("{\"text\":\"ok\"}\n{broken\n", "c.jsonl", CorpusFormat::kJsonl);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("c.jsonl:2"), std::string::npos);
  }
}

// Fixture rows: a (ok), b (empty text), c (ok). Running the loader by hand on
// this gives 2 comments and 1 skipped record.
TEST(LoadCorpusTest, CsvEmptyTextSkippedAndTallied) {
  const std::string csv = "id,text\na,She won.\nb,\nc,\"He lost, badly.\"\n";
  EXPECT_THROW(ParseCorpus(csv, "c.csv", CorpusFormat::kCsv), InputError);
  LoadOptions options;
  options.skip_malformed = true;
  const LoadResult r = ParseCorpus(csv, "c.csv", CorpusFormat::kCsv, options);
  ASSERT_EQ(r.comments.size(), 2u);
  EXPECT_EQ(r.skipped, 1u);
  ASSERT_EQ(r.skipped_records.size(), 1u);
  EXPECT_NE(r.skipped_records[0].find("c.csv:3"), std::string::npos);
  EXPECT_EQ(r.comments[1].text, "He lost, badly.");
}

TEST(LoadCorpusTest, DuplicateIdsAreMalformed) {
  EXPECT_THROW(ParseCorpus("id,text\na,x\na,y\n", "c.csv", CorpusFormat::kCsv),
               InputError);
}

TEST(LoadCorpusTest, MissingFileIsInputError) {
  EXPECT_THROW(LoadCorpus("/nonexistent/corpus.txt", CorpusFormat::kPlainLines),
               InputError);
}

TEST(LoadCorpusTest, SourceLabelDefaultsToFileStem) {
  const auto path = std::filesystem::temp_directory_path() / "psa_label_test.txt";
  std::ofstream(path) << "She won.\n";
  const LoadResult r = LoadCorpus(path, CorpusFormat::kPlainLines);
  ASSERT_EQ(r.comments.size(), 1u);
  EXPECT_EQ(r.comments[0].source, "psa_label_test");
  std::filesystem::remove(path);
}

TEST(FindAnchorsTest, SubjectAndPossessive) {
  const ExtractionConfig config;
  const auto anchors = FindAnchors("She said his plan failed.", config);
  ASSERT_EQ(anchors.size(), 2u);
  EXPECT_EQ(anchors[0], (AnchorSpan{0, 0, 3, AnchorForm::kSubject, Gender::kFemale}));
  EXPECT_EQ(anchors[1], (AnchorSpan{2, 9, 12, AnchorForm::kPossessiveDeterminer,
                                    Gender::kMale}));
}

TEST(FindAnchorsTest, HerBeforeStopWordIsObject) {
  const ExtractionConfig config;
  const auto anchors = FindAnchors("I met her yesterday.", config);
  ASSERT_EQ(anchors.size(), 1u);
  EXPECT_EQ(anchors[0].form, AnchorForm::kObject);
  EXPECT_EQ(anchors[0].gender, Gender::kFemale);
  EXPECT_TRUE(IsHerObjectFollower("yesterday"));
}

TEST(FindAnchorsTest, HerBeforeNounIsPossessive) {
  const ExtractionConfig config;
  EXPECT_EQ(FindAnchors("Her car is red.", config)[0].form,
            AnchorForm::kPossessiveDeterminer);
  EXPECT_EQ(FindAnchors("I gave her a ride.", config)[0].form,
            AnchorForm::kObject);
  EXPECT_EQ(FindAnchors("I love her.", config)[0].form, AnchorForm::kObject);
  EXPECT_EQ(FindAnchors("I saw her. Then I left.", config)[0].form,
            AnchorForm::kObject);
}

TEST(FindAnchorsTest, ObjectPronoun) {
  const ExtractionConfig config;
  const auto anchors = FindAnchors("I hate him.", config);
  ASSERT_EQ(anchors.size(), 1u);
  EXPECT_EQ(anchors[0], (AnchorSpan{2, 7, 10, AnchorForm::kObject, Gender::kMale}));
}

TEST(FindAnchorsTest, HersAndCaseInsensitivity) {
  const ExtractionConfig config;
  const auto anchors = FindAnchors("The book is HERS.", config);
  ASSERT_EQ(anchors.size(), 1u);
  EXPECT_EQ(anchors[0].form, AnchorForm::kPossessivePronoun);
}

TEST(FindAnchorsTest, ReflexivesAndContractionsAreNotAnchors) {
  const ExtractionConfig config;
  EXPECT_TRUE(FindAnchors("She hurt herself.", config).size() == 1);
  EXPECT_TRUE(FindAnchors("He's here, himself.", config).empty());
}

TEST(FindAnchorsTest, ExcludeNeverYieldsHer) {
  ExtractionConfig config;
  config.her_disambiguation = HerDisambiguation::kExclude;
  EXPECT_TRUE(FindAnchors("I met her yesterday.", config).empty());
  const auto anchors = FindAnchors("Her dog bit him.", config);
  ASSERT_EQ(anchors.size(), 1u);
  EXPECT_EQ(anchors[0].gender, Gender::kMale);
}

TEST(ExtractionConfigTest, Validation) {
  ExtractionConfig c;
  c.sample_size = 1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.max_words = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.anchor_inventory.clear();
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.anchor_inventory.push_back({"He", AnchorForm::kSubject, Gender::kMale});
  EXPECT_THROW(c.Validate(), ConfigError);
}

std::vector<RawComment> Comments(const std::vector<std::string>& texts) {
  std::vector<RawComment> out;
  for (size_t i = 0; i < texts.size(); ++i) {
    out.push_back({"c" + std::to_string(i), texts[i], "test"});
  }
  return out;
}

std::vector<RawComment> GenderedCorpus(size_t female, size_t male) {
  std::vector<std::string> texts;
  for (size_t i = 0; i < female; ++i) texts.push_back("She said thing " + std::to_string(i));
  for (size_t i = 0; i < male; ++i) texts.push_back("He said thing " + std::to_string(i));
  return Comments(texts);
}

TEST(ExtractTest, BalancedDeterministicSample) {
  ExtractionConfig config;
  config.sample_size = 4;
  config.seed = 7;
  const auto corpus = GenderedCorpus(5, 5);
  const ExtractionResult a = ExtractAnchoredSentences(corpus, config);
  const ExtractionResult b = ExtractAnchoredSentences(corpus, config);
  ASSERT_EQ(a.sentences.size(), 4u);
  size_t female = 0;
  for (const auto& s : a.sentences) female += s.anchor.gender == Gender::kFemale;
  EXPECT_EQ(female, 2u);
  EXPECT_EQ(a.sentences, b.sentences);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(ExtractTest, LongCommentExcluded) {
  std::string text = "He";
  for (int i = 0; i < 59; ++i) text += " word";
  ASSERT_EQ(WordCount(text), 60u);
  ExtractionConfig config;
  config.gender_balance = false;
  const auto corpus = Comments({text, "She left."});
  const ExtractionResult r = ExtractAnchoredSentences(corpus, config);
  ASSERT_EQ(r.sentences.size(), 1u);
  EXPECT_EQ(r.sentences[0].text, "She left.");
  EXPECT_EQ(r.too_long, 1u);
}

// 3 female / 9 male eligible with sample_size 8: the sampler takes
// min(3, 9) = 3 from each bucket and records a shortfall.
TEST(ExtractTest, ShortfallTakesMinimumBucket) {
  ExtractionConfig config;
  config.sample_size = 8;
  const ExtractionResult r = ExtractAnchoredSentences(GenderedCorpus(3, 9), config);
  size_t female = 0, male = 0;
  for (const auto& s : r.sentences) {
    female += s.anchor.gender == Gender::kFemale;
    male += s.anchor.gender == Gender::kMale;
  }
  EXPECT_EQ(female, 3u);
  EXPECT_EQ(male, 3u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("shortfall"), std::string::npos);
}

TEST(ExtractTest, LeftmostAnchorWins) {
  ExtractionConfig config;
  config.gender_balance = false;
  const ExtractionResult r =
      ExtractAnchoredSentences(Comments({"I told him she was right."}), config);
  ASSERT_EQ(r.sentences.size(), 1u);
  EXPECT_EQ(r.sentences[0].anchor.gender, Gender::kMale);
  EXPECT_EQ(r.sentences[0].anchor.token_index, 2u);
}

TEST(ExtractTest, NoEligibleSentencesIsError) {
  ExtractionConfig config;
  EXPECT_THROW(ExtractAnchoredSentences(Comments({"Nothing here.", "Nor here."}), config),
               InputError);
}

TEST(ExtractTest, OutputKeepsCorpusOrderAndDropsDuplicates) {
  ExtractionConfig config;
  config.gender_balance = false;
  config.sample_size = 10;
  const ExtractionResult r = ExtractAnchoredSentences(
      Comments({"He won.", "She won.", "He won.", "They won."}), config);
  ASSERT_EQ(r.sentences.size(), 2u);
  EXPECT_EQ(r.sentences[0].source_id, "c0");
  EXPECT_EQ(r.sentences[1].source_id, "c1");
  EXPECT_EQ(r.duplicates, 1u);
  EXPECT_EQ(r.no_anchor, 1u);
}

// Invariants over random corpora: length bound, span round trip, exact
// balance without shortfall, reproducibility.
TEST(ExtractTest, PropertyInvariantsOnRandomCorpora) {
  const std::vector<std::string> vocab = {"he", "She", "him", "her", "his", "hers",
                                          "the", "car", "yesterday", "a", "loves",
                                          "plan", "!", ",", "won't"};
  SplitMix64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> texts;
    for (int c = 0; c < 80; ++c) {
      std::string text;
      const size_t words = 1 + rng.Below(12);
      for (size_t w = 0; w < words; ++w) {
        text += vocab[rng.Below(vocab.size())];
        text += " ";
      }
      texts.push_back(text);
    }
    ExtractionConfig config;
    config.max_words = 8;
    config.sample_size = 10;
    config.seed = trial;
    config.her_disambiguation =
        trial % 2 ? HerDisambiguation::kExclude : HerDisambiguation::kHeuristic;
    ExtractionResult r;
    try {
      r = ExtractAnchoredSentences(Comments(texts), config);
    } catch (const InputError&) {
      continue;
    }
    size_t female = 0, male = 0;
    for (const AnchoredSentence& s : r.sentences) {
      ASSERT_LE(s.token_count, config.max_words);
      const std::string surface = AsciiLower(
          s.text.substr(s.anchor.char_start, s.anchor.char_end - s.anchor.char_start));
      ASSERT_TRUE(surface == "he" || surface == "she" || surface == "him" ||
                  surface == "her" || surface == "his" || surface == "hers")
          << surface;
      if (config.her_disambiguation == HerDisambiguation::kExclude) {
        ASSERT_NE(surface, "her");
      }
      female += s.anchor.gender == Gender::kFemale;
      male += s.anchor.gender == Gender::kMale;
    }
    if (r.warnings.empty()) {
      EXPECT_EQ(female, male);
    }
    EXPECT_EQ(ExtractAnchoredSentences(Comments(texts), config).sentences, r.sentences);
  }
}

TEST(SentencesJsonlTest, RoundTrip) {
  ExtractionConfig config;
  config.gender_balance = false;
  const auto r = ExtractAnchoredSentences(
      Comments({"She said \"his\" plan failed.", "I met her yesterday."}), config);
  const std::string jsonl = SentencesToJsonl(r.sentences);
  EXPECT_EQ(SentencesFromJsonl(jsonl), r.sentences);
  EXPECT_NE(jsonl.find("\"form\":\"subject\""), std::string::npos);
}

TEST(SentencesJsonlTest, CorruptSpanRejected) {
  EXPECT_THROW(
      SentencesFromJsonl(R"({"source_id":"a","text":"He","token_count":1,)"
                         R"("anchor":{"token_index":0,"char_start":0,"char_end":9,)"
                         R"("form":"subject","gender":"male"}})"),
      InputError);
}

}  // namespace
}  // namespace psa

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cqarank/textproc.hpp"
#include "cqarank/vectorize.hpp"
#include "fixtures.hpp"

using namespace cqarank;
using namespace cqarank::vectorize;

TEST_CASE("fit_tfidf applies the document-frequency floor") {
  TfidfModel model = fit_tfidf({{"a", "b"}, {"b", "c"}}, 100);
  CHECK(model.vocabulary.size() == 1);
  CHECK(model.vocabulary.count("b") == 1);
  CHECK(model.document_frequency.at("b") == 2);
  CHECK(model.corpus_size == 2);
}

TEST_CASE("fit_tfidf keeps every token of identical documents") {
  TfidfModel model = fit_tfidf({{"x", "y", "z"}, {"x", "y", "z"}, {"x", "y", "z"}}, 100);
  CHECK(model.vocabulary.size() == 3);
  for (const auto& [token, df] : model.document_frequency) CHECK(df == 3);
}

TEST_CASE("fit_tfidf caps the vocabulary by document frequency") {
  // df: common=3, mid=2, rare=2 -> cap 1 keeps "common"
  TfidfModel model =
      fit_tfidf({{"common", "mid"}, {"common", "mid", "rare"}, {"common", "rare"}}, 1);
  CHECK(model.vocabulary.size() == 1);
  CHECK(model.vocabulary.count("common") == 1);
  CHECK_THROWS_AS(fit_tfidf({}, 10), std::invalid_argument);
}

TEST_CASE("tfidf_transform matches the hand-evaluated weighting") {
  // df: a=3, b=2, c=1 over N=3; vocabulary {a, b}
  TfidfModel model = fit_tfidf({{"a", "b"}, {"a", "c"}, {"a", "b", "b"}}, 100);
  REQUIRE(model.vocabulary.size() == 2);

  SparseVector vec = tfidf_transform(model, {"a", "b", "b", "c"});
  REQUIRE(vec.size() == 2);
  // w(a) = 1 * (ln(4/4)+1) = 1; w(b) = 2 * (ln(4/3)+1) = 2.5753641449035618
  CHECK(vec[static_cast<std::size_t>(model.vocabulary.at("a"))].second ==
        doctest::Approx(0.3619650009883935).epsilon(1e-12));
  CHECK(vec[static_cast<std::size_t>(model.vocabulary.at("b"))].second ==
        doctest::Approx(0.9321916852554909).epsilon(1e-12));
}

TEST_CASE("tfidf_transform yields unit vectors or zero") {
  TfidfModel model = fit_tfidf({{"a", "b"}, {"a", "b"}}, 100);
  CHECK(tfidf_transform(model, {"zzz"}).empty());

  Rng rng(3);
  const std::vector<std::string> pool = {"a", "b", "zzz"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> doc;
    int n = static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) doc.push_back(pool[rng.below(pool.size())]);
    SparseVector vec = tfidf_transform(model, doc);
    double norm_sq = 0.0;
    for (const auto& [col, w] : vec) {
      CHECK(w >= 0.0);
      norm_sq += w * w;
    }
    if (!vec.empty()) CHECK(std::abs(std::sqrt(norm_sq) - 1.0) < 1e-9);
  }
}

TEST_CASE("load_embeddings parses word-and-floats lines") {
  std::istringstream in("the 0.1 0.2\ncat -1 2.5\n");
  EmbeddingTable table = load_embeddings(in, 2);
  CHECK(table.word_count() == 2);
  int id = table.id_for("the");
  CHECK(id >= 2);
  CHECK(table.vec(id)[0] == doctest::Approx(0.1));
  CHECK(table.vec(id)[1] == doctest::Approx(0.2));
  CHECK(table.id_for("dog") == EmbeddingTable::kUnkId);
  for (double v : table.vec(EmbeddingTable::kUnkId)) CHECK(v == 0.0);
  for (double v : table.vec(EmbeddingTable::kPadId)) CHECK(v == 0.0);
}

TEST_CASE("load_embeddings reports bad lines and duplicates") {
  std::istringstream wrong("the 0.1 0.2 0.3\n");
  CHECK_THROWS_WITH_AS(load_embeddings(wrong, 2), doctest::Contains("line 1"),
                       std::runtime_error);

  std::istringstream dup("w 1 1\nw 2 2\n");
  EmbeddingTable table = load_embeddings(dup, 2);
  CHECK(table.word_count() == 1);
  CHECK(table.duplicate_count == 1);
  CHECK(table.vec(table.id_for("w"))[0] == doctest::Approx(2.0));  // last wins

  std::istringstream empty("");
  EmbeddingTable bare = load_embeddings(empty, 3);
  CHECK(bare.word_count() == 0);
  CHECK(bare.vectors.size() == 6);  // PAD + UNK rows
}

TEST_CASE("summarize_sentences keeps the longest sentences in order") {
  CHECK(summarize_sentences("a b c. d. e f g h.", 2) == "a b c. e f g h.");
  std::string text = "a b c. d. e f g h.";
  CHECK(summarize_sentences(text, -1) == text);
  CHECK(summarize_sentences("only one sentence", 3) == "only one sentence");
}

TEST_CASE("summarize_sentences breaks length ties toward earlier sentences") {
  CHECK(summarize_sentences("a b. c d. e f.", 2) == "a b. c d.");
}

TEST_CASE("summarize_sentences keeps a subsequence in document order") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    int n_sent = 1 + static_cast<int>(rng.below(6));
    for (int s = 0; s < n_sent; ++s) {
      int words = 1 + static_cast<int>(rng.below(5));
      for (int w = 0; w < words; ++w) text += "w" + std::to_string(rng.below(9)) + " ";
      text += ". ";
    }
    int max_sentences = 1 + static_cast<int>(rng.below(7));
    std::string out = summarize_sentences(text, max_sentences);
    auto out_sentences = textproc::split_sentences(out);
    auto in_sentences = textproc::split_sentences(text);
    CHECK(out_sentences.size() <= static_cast<std::size_t>(max_sentences));
    // order preserved: each output sentence appears in input order
    std::size_t cursor = 0;
    for (const auto& s : out_sentences) {
      while (cursor < in_sentences.size() && in_sentences[cursor] != s) ++cursor;
      CHECK(cursor < in_sentences.size());
    }
    if (static_cast<std::size_t>(max_sentences) >= in_sentences.size()) CHECK(out == text);
  }
}

TEST_CASE("encode_sequence pads, truncates and counts unknowns") {
  std::istringstream in("hello 1 0\nworld 0 1\n");
  EmbeddingTable table = load_embeddings(in, 2);

  TokenSequence seq = encode_sequence("hello world", table, 4);
  REQUIRE(seq.ids.size() == 4);
  CHECK(seq.ids[0] == table.id_for("hello"));
  CHECK(seq.ids[1] == table.id_for("world"));
  CHECK(seq.ids[2] == EmbeddingTable::kPadId);
  CHECK(seq.ids[3] == EmbeddingTable::kPadId);
  CHECK(seq.valid_length == 2);
  CHECK(seq.oov_positions == 0);

  TokenSequence with_unk = encode_sequence("hello stranger", table, 4);
  CHECK(with_unk.ids[1] == EmbeddingTable::kUnkId);
  CHECK(with_unk.oov_positions == 1);

  std::string long_text;
  for (int i = 0; i < 150; ++i) long_text += "hello ";
  TokenSequence truncated = encode_sequence(long_text, table, 100);
  CHECK(truncated.valid_length == 100);
  CHECK(truncated.ids.size() == 100);
}

TEST_CASE("encode_sequence always emits exactly max_len ids") {
  std::istringstream in("a 1\nb 2\n");
  EmbeddingTable table = load_embeddings(in, 1);
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    int max_len = 1 + static_cast<int>(rng.below(20));
    std::string text;
    int words = static_cast<int>(rng.below(30));
    for (int i = 0; i < words; ++i) text += (rng.below(2) ? "a " : "zz ");
    TokenSequence seq = encode_sequence(text, table, max_len);
    CHECK(seq.ids.size() == static_cast<std::size_t>(max_len));
    CHECK(seq.valid_length <= max_len);
    for (int i = seq.valid_length; i < max_len; ++i) {
      CHECK(seq.ids[static_cast<std::size_t>(i)] == EmbeddingTable::kPadId);
    }
  }
}

TEST_CASE("oov_report counts distinct types") {
  std::istringstream in("a 1 1\n");
  EmbeddingTable table = load_embeddings(in, 2);

  OovReport report = oov_report({"a b"}, table);
  CHECK(report.converted == 1);
  CHECK(report.misses == 1);
  CHECK(report.miss_examples == std::vector<std::string>{"b"});

  OovReport empty = oov_report({}, table);
  CHECK(empty.converted == 0);
  CHECK(empty.misses == 0);
  CHECK(empty.miss_examples.empty());

  OovReport covered = oov_report({"a a a", "a"}, table);
  CHECK(covered.converted == 1);
  CHECK(covered.misses == 0);
}

TEST_CASE("oov_report partition and example ordering") {
  std::istringstream in("w1 1\nw2 2\n");
  EmbeddingTable table = load_embeddings(in, 1);
  std::vector<std::string> corpus;
  for (int i = 0; i < 30; ++i) corpus.push_back("w1 m" + std::to_string(i));
  OovReport report = oov_report(corpus, table);
  CHECK(report.converted + report.misses == 31);  // w1 + 30 misses
  CHECK(report.miss_examples.size() == 20);
  for (std::size_t i = 1; i < report.miss_examples.size(); ++i) {
    CHECK(report.miss_examples[i - 1] < report.miss_examples[i]);
  }
}

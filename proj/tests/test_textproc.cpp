#include <doctest.h>

#include <cctype>

#include "cqarank/common.hpp"
#include "cqarank/textproc.hpp"

using namespace cqarank;
using namespace cqarank::textproc;

TEST_CASE("strip_html removes tags and keeps text") {
  CHECK(strip_html("<p>Hi <b>there</b></p>") == "Hi there");
  CHECK(strip_html("a &amp; b") == "a & b");
  CHECK(strip_html("") == "");
}

TEST_CASE("strip_html turns block boundaries into newlines") {
  CHECK(strip_html("<p>one</p><p>two</p>") == "one\ntwo");
  CHECK(strip_html("line<br/>break") == "line\nbreak");
  CHECK(strip_html("<div>x</div><li>y</li><pre>z</pre>") == "x\ny\nz");
}

TEST_CASE("strip_html decodes the common entities") {
  CHECK(strip_html("1 &lt; 2 &gt; 0") == "1 < 2 > 0");
  CHECK(strip_html("say &quot;hi&quot;") == "say \"hi\"");
  CHECK(strip_html("a&nbsp;b") == "a b");
}

TEST_CASE("strip_html collapses whitespace within lines") {
  CHECK(strip_html("a   b\t c") == "a b c");
  CHECK(strip_html("  <p> padded </p>  ") == "padded");
}

TEST_CASE("strip_html survives malformed markup") {
  CHECK(strip_html("a < b") == "a < b");           // not a tag
  CHECK(strip_html("tail<unclosed") == "tail<unclosed");
  CHECK(strip_html("<p>ok<") == "ok<");
}

TEST_CASE("strip_html is idempotent on adversarial inputs") {
  Rng rng(31);
  const std::string pieces[] = {"<p>", "</p>", "&amp;", "&lt;", "b", " ", "<b>", "x&gt;",
                                "\n",  "<br/>", "&quot;", "<",   ">",  "&nbsp;", "code"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) text += pieces[rng.below(std::size(pieces))];
    std::string once = strip_html(text);
    CHECK(strip_html(once) == once);
  }
}

TEST_CASE("tokenize lowercases and trims punctuation") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("tokenize keeps internal punctuation") {
  CHECK(tokenize("foo_bar (baz)") == std::vector<std::string>{"foo_bar", "baz"});
  CHECK(tokenize("a.b.c.") == std::vector<std::string>{"a.b.c"});
}

TEST_CASE("tokenize output has no uppercase and no empty tokens") {
  Rng rng(57);
  const std::string glyphs = "aB cD!?.'_-XyZ\t\n,";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    int n = static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) text += glyphs[rng.below(glyphs.size())];
    for (const auto& tok : tokenize(text)) {
      CHECK(!tok.empty());
      for (char c : tok) CHECK(!std::isupper(static_cast<unsigned char>(c)));
    }
  }
}

TEST_CASE("split_sentences honours terminators and newlines") {
  CHECK(split_sentences("A b. C d! E?") == std::vector<std::string>{"A b.", "C d!", "E?"});
  CHECK(split_sentences("no terminator") == std::vector<std::string>{"no terminator"});
  CHECK(split_sentences("line1\nline2") == std::vector<std::string>{"line1", "line2"});
}

TEST_CASE("split_sentences needs whitespace after the terminator") {
  CHECK(split_sentences("v1.2 shipped") == std::vector<std::string>{"v1.2 shipped"});
  CHECK(split_sentences("one.  two") == std::vector<std::string>{"one.", "two"});
  CHECK(split_sentences("\n\n") == std::vector<std::string>{});
}

TEST_CASE("text_stats matches hand-computed values") {
  TextStats s = text_stats("ab cde. f.");
  CHECK(s.n_words == 3);
  CHECK(s.avg_word_len == doctest::Approx(2.0));
  CHECK(s.n_sent == 2);
  CHECK(s.avg_n_word_sent == doctest::Approx(1.5));
  CHECK(s.max_n_word_sent == 2);
}

TEST_CASE("text_stats on degenerate inputs") {
  TextStats empty = text_stats("");
  CHECK(empty.n_words == 0);
  CHECK(empty.avg_word_len == 0.0);
  CHECK(empty.n_sent == 0);
  CHECK(empty.avg_n_word_sent == 0.0);
  CHECK(empty.max_n_word_sent == 0);

  TextStats one = text_stats("word");
  CHECK(one.n_words == 1);
  CHECK(one.n_sent == 1);
  CHECK(one.avg_n_word_sent == doctest::Approx(1.0));
  CHECK(one.max_n_word_sent == 1);
}

TEST_CASE("text_stats word count equals the per-sentence sum") {
  Rng rng(101);
  const std::string words[] = {"alpha", "beta.", "gamma", "x!", "y?", "z"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    int n = static_cast<int>(rng.below(25));
    for (int i = 0; i < n; ++i) {
      if (i) text += rng.below(6) == 0 ? '\n' : ' ';
      text += words[rng.below(std::size(words))];
    }
    long long total = 0;
    for (const auto& sentence : split_sentences(text)) {
      total += static_cast<long long>(tokenize(sentence).size());
    }
    TextStats s = text_stats(text);
    CHECK(s.n_words == total);
    if (s.n_sent >= 1) CHECK(s.max_n_word_sent >= s.avg_n_word_sent);
  }
}

TEST_CASE("common_word_count uses distinct sets") {
  CHECK(common_word_count({"how", "to", "sort", "list"}, {"sort", "the", "list"}) == 2);
  CHECK(common_word_count({"a", "b"}, {"c", "d"}) == 0);
  CHECK(common_word_count({"a", "b", "c", "d", "e"}, {"e", "d", "c", "b", "a"}) == 5);
  CHECK(common_word_count({"x", "x", "y"}, {"x", "x", "x"}) == 1);
}

TEST_CASE("has_urls scans raw attributes case-insensitively") {
  CHECK(has_urls("<a href=\"https://x.y\">z</a>"));
  CHECK(!has_urls("plain text"));
  CHECK(has_urls("HTTPS://CAPS"));
  CHECK(has_urls("see http://example.org now"));
}

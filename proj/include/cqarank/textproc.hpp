#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cqarank::textproc {

// Token and sentence statistics of one plain-text body.
struct TextStats {
  long long n_words = 0;
  double avg_word_len = 0.0;
  long long n_sent = 0;
  double avg_n_word_sent = 0.0;
  long long max_n_word_sent = 0;
};

// Removes tags from post HTML. Block-level boundaries (p, br, li, pre, div)
// become newlines, the common entities (&amp; &lt; &gt; &quot; &nbsp;) are
// decoded, and whitespace is collapsed to single spaces within lines.
// Malformed HTML is handled by best-effort tag scanning. Idempotent.
std::string strip_html(std::string_view raw);

// Lowercased whitespace-delimited tokens with leading/trailing punctuation
// trimmed. Internal punctuation (apostrophes, underscores) is retained;
// tokens that trim to nothing are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Splits plain text at newlines or at '.', '!', '?' followed by whitespace.
// Segments are trimmed; empty segments are dropped.
std::vector<std::string> split_sentences(std::string_view text);

// Word/sentence statistics over plain text; empty text yields all zeros.
TextStats text_stats(std::string_view text);

// Size of the intersection of the distinct-token sets.
long long common_word_count(const std::vector<std::string>& q_tokens,
                            const std::vector<std::string>& a_tokens);

// True iff the raw body contains "http://" or "https://", case-insensitive.
// Operates on raw HTML because links live in attributes that stripping drops.
bool has_urls(std::string_view raw);

}  // namespace cqarank::textproc

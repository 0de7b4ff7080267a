#include "cqarank/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace cqarank::textproc {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_block_tag(std::string_view name) {
  static const std::unordered_set<std::string_view> kBlock = {"p", "br", "li", "pre", "div"};
  return kBlock.contains(name);
}

// One sanitation pass: drop tags (block tags leave a newline), decode
// entities, collapse whitespace within lines.
std::string strip_pass(std::string_view raw) {
  std::string text;
  text.reserve(raw.size());

  for (std::size_t i = 0; i < raw.size();) {
    char c = raw[i];
    if (c == '<' && i + 1 < raw.size()) {
      char next = raw[i + 1];
      bool tag_like = next == '/' || next == '!' ||
                      std::isalpha(static_cast<unsigned char>(next)) != 0;
      std::size_t close = tag_like ? raw.find('>', i + 1) : std::string_view::npos;
      if (close != std::string_view::npos) {
        std::size_t p = i + 1;
        if (p < close && raw[p] == '/') ++p;
        std::string name;
        while (p < close && std::isalpha(static_cast<unsigned char>(raw[p])) != 0) {
          name.push_back(to_lower(raw[p]));
          ++p;
        }
        if (is_block_tag(name)) text.push_back('\n');
        i = close + 1;
        continue;
      }
    }
    if (c == '&') {
      static constexpr std::pair<std::string_view, char> kEntities[] = {
          {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&nbsp;", ' '}};
      bool decoded = false;
      for (const auto& [entity, repl] : kEntities) {
        if (raw.substr(i, entity.size()) == entity) {
          text.push_back(repl);
          i += entity.size();
          decoded = true;
          break;
        }
      }
      if (decoded) continue;
    }
    text.push_back(c);
    ++i;
  }

  // Collapse whitespace: runs of spaces/tabs become one space, runs holding a
  // newline become one newline; edges of the result are trimmed.
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      bool newline = false;
      while (i < text.size() && is_space(text[i])) {
        newline = newline || text[i] == '\n';
        ++i;
      }
      if (!out.empty() && i < text.size()) out.push_back(newline ? '\n' : ' ');
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::string strip_html(std::string_view raw) {
  // Iterate to a fixed point: decoding can surface new tag-like text (e.g.
  // "&amp;lt;b&amp;gt;"), and each non-identity pass strictly shrinks the
  // string, so this terminates and the result is idempotent.
  std::string current(raw);
  for (;;) {
    std::string next = strip_pass(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::size_t end = i;
    while (start < end && is_punct(text[start])) ++start;
    while (end > start && is_punct(text[end - 1])) --end;
    if (start < end) {
      std::string tok(text.substr(start, end - start));
      std::transform(tok.begin(), tok.end(), tok.begin(), to_lower);
      tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  auto flush = [&] {
    std::size_t b = current.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
      current.clear();
      return;
    }
    std::size_t e = current.find_last_not_of(" \t\r\n");
    sentences.push_back(current.substr(b, e - b + 1));
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    current.push_back(c);
    bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && i + 1 < text.size() && is_space(text[i + 1])) flush();
  }
  flush();
  return sentences;
}

TextStats text_stats(std::string_view text) {
  TextStats stats;
  auto tokens = tokenize(text);
  stats.n_words = static_cast<long long>(tokens.size());
  if (!tokens.empty()) {
    long long chars = 0;
    for (const auto& t : tokens) chars += static_cast<long long>(t.size());
    stats.avg_word_len = static_cast<double>(chars) / static_cast<double>(tokens.size());
  }

  auto sentences = split_sentences(text);
  stats.n_sent = static_cast<long long>(sentences.size());
  if (!sentences.empty()) {
    long long total = 0;
    for (const auto& s : sentences) {
      long long n = static_cast<long long>(tokenize(s).size());
      total += n;
      stats.max_n_word_sent = std::max(stats.max_n_word_sent, n);
    }
    stats.avg_n_word_sent = static_cast<double>(total) / static_cast<double>(sentences.size());
  }
  return stats;
}

long long common_word_count(const std::vector<std::string>& q_tokens,
                            const std::vector<std::string>& a_tokens) {
  std::unordered_set<std::string_view> q_set(q_tokens.begin(), q_tokens.end());
  std::unordered_set<std::string_view> seen;
  long long common = 0;
  for (const auto& t : a_tokens) {
    if (q_set.contains(t) && seen.insert(t).second) ++common;
  }
  return common;
}

bool has_urls(std::string_view raw) {
  std::string lower(raw);
  std::transform(lower.begin(), lower.end(), lower.begin(), to_lower);
  return lower.find("http://") != std::string::npos ||
         lower.find("https://") != std::string::npos;
}

}  // namespace cqarank::textproc

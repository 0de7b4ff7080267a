#include "cqarank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace cqarank::metrics {

namespace {

double discount(std::size_t rank) {  // rank is 1-based
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace

RankingQuery::RankingQuery(std::vector<int> gold_in, std::vector<double> scores_in)
    : gold(std::move(gold_in)), scores(std::move(scores_in)) {
  if (gold.empty() || gold.size() != scores.size()) {
    throw std::invalid_argument("query: gold and scores must have equal non-zero length");
  }
  std::size_t ones = 0;
  for (int g : gold) {
    if (g != 0 && g != 1) throw std::invalid_argument("query: gold entries must be 0/1");
    ones += static_cast<std::size_t>(g);
  }
  if (ones != 1) throw std::invalid_argument("query: gold must contain exactly one 1");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("query: scores must be finite");
  }
}

std::size_t RankingQuery::accepted_index() const {
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == 1) return i;
  }
  return gold.size();  // unreachable for validated queries
}

double reciprocal_rank(const RankingQuery& query) {
  double accepted_score = query.scores[query.accepted_index()];
  std::size_t greater = 0, tied = 0;
  for (std::size_t i = 0; i < query.scores.size(); ++i) {
    if (query.scores[i] > accepted_score) ++greater;
    else if (query.scores[i] == accepted_score) ++tied;
  }
  std::size_t rank = 1 + greater + (tied - 1);  // self excluded from ties
  return 1.0 / static_cast<double>(rank);
}

double mean_reciprocal_rank(std::span<const RankingQuery> queries) {
  if (queries.empty()) throw std::invalid_argument("mean_reciprocal_rank: no queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += reciprocal_rank(q);
  return sum / static_cast<double>(queries.size());
}

double ndcg_at_k(const RankingQuery& query, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  std::size_t accepted = query.accepted_index();
  double accepted_score = query.scores[accepted];

  // The accepted answer's tied group occupies a fixed rank range [first, last]
  // (1-based); within it every position is equally likely, so the expected
  // DCG is the mean of the discounts over the ranks that survive the cutoff.
  std::size_t greater = 0, tied = 0;
  for (double s : query.scores) {
    if (s > accepted_score) ++greater;
    else if (s == accepted_score) ++tied;
  }
  std::size_t first = greater + 1;
  std::size_t last = greater + tied;
  std::size_t cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), query.n_answers());

  double sum = 0.0;
  for (std::size_t rank = first; rank <= std::min(last, cutoff); ++rank) sum += discount(rank);
  double dcg = sum / static_cast<double>(tied);
  double idcg = discount(1);  // one relevant item, ideally at rank 1
  return dcg / idcg;
}

double ndcg_permutation_oracle(const RankingQuery& query, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_permutation_oracle: k must be >= 1");
  std::size_t n = query.n_answers();
  if (n > 9) throw std::invalid_argument("oracle bound exceeded: n_answers > 9");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end());

  std::size_t cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  double total = 0.0;
  std::size_t count = 0;
  do {
    // keep only orderings consistent with the scores (non-increasing)
    bool consistent = true;
    for (std::size_t i = 1; i < n && consistent; ++i) {
      consistent = query.scores[order[i - 1]] >= query.scores[order[i]];
    }
    if (!consistent) continue;
    double dcg = 0.0;
    for (std::size_t pos = 0; pos < cutoff; ++pos) {
      dcg += static_cast<double>(query.gold[order[pos]]) * discount(pos + 1);
    }
    total += dcg / discount(1);
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));

  return total / static_cast<double>(count);
}

double expected_random_rr(int n) {
  if (n < 1) throw std::invalid_argument("expected_random_rr: n must be >= 1");
  double harmonic = 0.0;
  for (int r = 1; r <= n; ++r) harmonic += 1.0 / static_cast<double>(r);
  return harmonic / static_cast<double>(n);
}

MetricReport evaluate_queries(std::span<const RankingQuery> queries) {
  if (queries.empty()) throw std::invalid_argument("evaluate_queries: no queries");
  MetricReport report;
  report.n_queries = queries.size();
  for (const auto& q : queries) {
    report.ndcg_at_1 += ndcg_at_k(q, 1);
    report.ndcg_at_3 += ndcg_at_k(q, 3);
    report.ndcg_at_5 += ndcg_at_k(q, 5);
    report.mrr += reciprocal_rank(q);
  }
  double n = static_cast<double>(queries.size());
  report.ndcg_at_1 /= n;
  report.ndcg_at_3 /= n;
  report.ndcg_at_5 /= n;
  report.mrr /= n;
  return report;
}

std::vector<RrByAnswerCount> mrr_vs_answer_count(std::span<const RankingQuery> queries) {
  if (queries.empty()) throw std::invalid_argument("mrr_vs_answer_count: no queries");
  std::map<std::size_t, std::pair<double, std::size_t>> groups;  // n -> (rr sum, count)
  for (const auto& q : queries) {
    auto& [sum, count] = groups[q.n_answers()];
    sum += reciprocal_rank(q);
    ++count;
  }
  std::vector<RrByAnswerCount> rows;
  rows.reserve(groups.size());
  for (const auto& [n, agg] : groups) {
    rows.push_back({n, agg.first / static_cast<double>(agg.second), agg.second});
  }
  return rows;
}

std::vector<HistogramBin> mrr_histogram(std::span<const RankingQuery> queries, int bin_count) {
  if (queries.empty()) throw std::invalid_argument("mrr_histogram: no queries");
  if (bin_count < 1) throw std::invalid_argument("mrr_histogram: bin_count must be >= 1");

  std::vector<HistogramBin> bins(static_cast<std::size_t>(bin_count));
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].lower_edge = static_cast<double>(i) / static_cast<double>(bin_count);
  }
  for (const auto& q : queries) {
    // right-closed bins: rr lands in (i/B, (i+1)/B]; rr is always > 0
    double rr = reciprocal_rank(q);
    double scaled = std::ceil(rr * static_cast<double>(bin_count));
    auto idx = static_cast<std::size_t>(std::max(scaled, 1.0)) - 1;
    if (idx >= bins.size()) idx = bins.size() - 1;
    ++bins[idx].count;
  }
  return bins;
}

}  // namespace cqarank::metrics

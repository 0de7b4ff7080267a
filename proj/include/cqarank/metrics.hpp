#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cqarank::metrics {

// One question's gold relevance vector (0/1, exactly one 1) and the model's
// score vector. Construction validates the invariants.
struct RankingQuery {
  std::vector<int> gold;
  std::vector<double> scores;

  RankingQuery(std::vector<int> gold_in, std::vector<double> scores_in);

  std::size_t n_answers() const { return gold.size(); }
  std::size_t accepted_index() const;
};

// 1 / rank of the accepted answer, with the pessimistic tie rule:
// rank = 1 + (#scores strictly greater) + (#scores tied, excluding itself).
double reciprocal_rank(const RankingQuery& query);

// Arithmetic mean of reciprocal_rank; throws on an empty collection.
double mean_reciprocal_rank(std::span<const RankingQuery> queries);

// Tie-aware NDCG at cutoff k: DCG is the expected value over uniformly random
// orderings of tied score groups, computed in closed form; IDCG places the
// single relevant item at rank 1.
double ndcg_at_k(const RankingQuery& query, int k);

// Test oracle: mean NDCG over every total ordering consistent with the score
// ordering, enumerated explicitly. Bounded to n_answers <= 9.
double ndcg_permutation_oracle(const RankingQuery& query, int k);

// Expected reciprocal rank of a uniformly random ranking of n answers:
// H(n) / n.
double expected_random_rr(int n);

struct MetricReport {
  double ndcg_at_1 = 0.0;
  double ndcg_at_3 = 0.0;
  double ndcg_at_5 = 0.0;
  double mrr = 0.0;
  std::size_t n_queries = 0;
};

MetricReport evaluate_queries(std::span<const RankingQuery> queries);

struct RrByAnswerCount {
  std::size_t n_answers = 0;
  double mean_rr = 0.0;
  std::size_t n_queries = 0;
};

// Queries grouped by answer count, one row per distinct count, ascending.
std::vector<RrByAnswerCount> mrr_vs_answer_count(std::span<const RankingQuery> queries);

struct HistogramBin {
  double lower_edge = 0.0;
  std::size_t count = 0;
};

// Uniform bins over [0, 1], top edge inclusive; counts sum to n_queries.
std::vector<HistogramBin> mrr_histogram(std::span<const RankingQuery> queries, int bin_count);

}  // namespace cqarank::metrics

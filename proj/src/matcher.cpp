#include "gencarve/matcher.hpp"

#include <algorithm>

#include "gencarve/error.hpp"
#include "gencarve/metrics.hpp"

namespace gencarve::matcher {

double score(double chi, double jsd, double cos, const MatchWeights& w) {
  return (w.alpha * chi) + (w.beta * jsd) - (w.gamma * cos);
}

PoolRanking rank_pool(ByteView predicted, const FragmentPool& pool, const MatchWeights& w, std::string prediction_id) {
  const auto predicted_hist = metrics::byte_histogram(predicted);
  PoolRanking ranking;
  ranking.prediction_id = std::move(prediction_id);
  ranking.entries.reserve(pool.entries.size());
  std::size_t true_entries = 0;
  for (const PoolEntry& entry : pool.entries) {
    if (entry.bytes.size() != predicted.size())
      throw Error(Errc::LengthMismatch, "pool entry " + std::to_string(entry.pool_index) + " has " +
                                            std::to_string(entry.bytes.size()) + " bytes, prediction " +
                                            std::to_string(predicted.size()));
    const auto s = metrics::byte_scores(predicted_hist, metrics::byte_histogram(entry.bytes));
    ranking.entries.push_back({entry.pool_index, entry.format, entry.is_true, score(s.chi, s.jsd, s.cos, w), s.chi,
                               s.jsd, s.cos});
    true_entries += entry.is_true ? 1 : 0;
  }
  if (true_entries != 1) throw Error(Errc::InvalidArgument, "pool must hold exactly one true continuation");
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    return a.score != b.score ? a.score < b.score : a.pool_index < b.pool_index;
  });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i)
    if (ranking.entries[i].is_true) ranking.true_rank = i + 1;
  return ranking;
}

MatchReport tally(const std::vector<PoolRanking>& rankings, std::size_t top_k) {
  if (rankings.empty()) throw Error(Errc::InvalidArgument, "nothing to tally");
  MatchReport r;
  r.top_k = top_k;
  r.total = rankings.size();
  for (const auto& ranking : rankings) {
    if (ranking.true_rank == 1) {
      ++r.rank1_count;
    } else if (ranking.true_rank >= 2 && ranking.true_rank <= top_k) {
      ++r.top_k_not1_count;
    } else {
      ++r.missed_count;
    }
  }
  return r;
}

std::string ranking_csv(const PoolRanking& ranking) {
  std::string out = "pool_index,format,chi,jsd,cos,score,rank,is_true\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    out += std::to_string(e.pool_index) + "," + std::string(format_name(e.format)) + "," + format_double(e.chi) + "," +
           format_double(e.jsd) + "," + format_double(e.cos) + "," + format_double(e.score) + "," +
           std::to_string(i + 1) + "," + (e.is_true ? "1" : "0") + "\n";
  }
  return out;
}

std::string tally_csv(const MatchReport& r) {
  return "outcome,count\nrank_1," + std::to_string(r.rank1_count) + "\ntop_" + std::to_string(r.top_k) + "_not_1," +
         std::to_string(r.top_k_not1_count) + "\nnot_in_top_" + std::to_string(r.top_k) + "," +
         std::to_string(r.missed_count) + "\ntotal," + std::to_string(r.total) + "\n";
}

std::string tally_table(const MatchReport& r) {
  const std::string k = std::to_string(r.top_k);
  return "Ranking outcome                          Count\n"
         "Correct match ranked 1st                 " + std::to_string(r.rank1_count) + "\n" +
         "Correct match within top " + k + " (not 1st)     " + std::to_string(r.top_k_not1_count) + "\n" +
         "Correct match not within top " + k + "           " + std::to_string(r.missed_count) + "\n" +
         "Total predictions                        " + std::to_string(r.total) + "\n";
}

}  // namespace gencarve::matcher

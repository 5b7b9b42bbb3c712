#pragma once

#include <string>
#include <vector>

#include "gencarve/fragmenter.hpp"
#include "gencarve/io.hpp"

namespace gencarve::matcher {

struct MatchWeights {
  double alpha = 0.01;  // chi-square
  double beta = 10.0;   // JSD
  double gamma = 10.0;  // cosine
};

/// alpha*chi + beta*jsd - gamma*cos; lower means more similar.
double score(double chi, double jsd, double cos, const MatchWeights& w = {});

struct RankedCandidate {
  std::size_t pool_index = 0;
  SourceFormat format = SourceFormat::Bmp;
  bool is_true = false;
  double score = 0;
  double chi = 0;
  double jsd = 0;
  double cos = 0;
};

struct PoolRanking {
  std::string prediction_id;
  std::vector<RankedCandidate> entries;  // ascending score, ties by pool_index
  std::size_t true_rank = 0;             // 1-based
};

PoolRanking rank_pool(ByteView predicted, const FragmentPool& pool, const MatchWeights& w = {},
                      std::string prediction_id = {});

struct MatchReport {
  std::size_t rank1_count = 0;
  std::size_t top_k_not1_count = 0;
  std::size_t missed_count = 0;
  std::size_t total = 0;
  std::size_t top_k = 5;
};

MatchReport tally(const std::vector<PoolRanking>& rankings, std::size_t top_k = 5);

/// pool_index,format,chi,jsd,cos,score,rank,is_true
std::string ranking_csv(const PoolRanking& ranking);
std::string tally_csv(const MatchReport& report);
std::string tally_table(const MatchReport& report);

}  // namespace gencarve::matcher

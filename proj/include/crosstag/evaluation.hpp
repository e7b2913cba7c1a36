#pragma once

#include <string>
#include <vector>

#include "crosstag/corpus.hpp"
#include "crosstag/model.hpp"
#include "crosstag/tags.hpp"

namespace crosstag {

enum class EvalTask { kAd, kAds };

const char* task_name(EvalTask t);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  MatchCounts& operator+=(const MatchCounts& o);
};

// AD: a prediction counts iff (start, end) matches a gold span; ADS
// additionally requires the sentiment. Counts are accumulated corpus-wide
// before precision/recall (micro averaging).
MatchCounts exact_match_counts(const std::vector<Segment>& gold, const std::vector<Segment>& pred,
                               EvalTask task);

struct EvalReport {
  EvalTask task = EvalTask::kAds;
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;  // 0 when the denominator is 0
  double recall = 0.0;
  double micro_f1 = 0.0;

  std::string to_json() const;
};

EvalReport make_report(EvalTask task, const MatchCounts& counts);

struct CorpusEval {
  EvalReport ad;
  EvalReport ads;
  double token_accuracy = 0.0;     // unified-tag accuracy, diagnostic
  EvalReport boundary_head_ad;     // the auxiliary head's own spans, diagnostic
};

// Greedy-decodes the unified head, extracts spans via the repair decoder and
// scores both tasks from the same predictions (AD by boundary projection).
CorpusEval evaluate_corpus(const Model& model, const std::vector<Sentence>& corpus);

}  // namespace crosstag

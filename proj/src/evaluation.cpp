#include "crosstag/evaluation.hpp"

#include <sstream>
#include <stdexcept>

namespace crosstag {

const char* task_name(EvalTask t) { return t == EvalTask::kAd ? "AD" : "ADS"; }

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  tp += o.tp;
  predicted += o.predicted;
  gold += o.gold;
  return *this;
}

MatchCounts exact_match_counts(const std::vector<Segment>& gold, const std::vector<Segment>& pred,
                               EvalTask task) {
  MatchCounts c;
  c.predicted = pred.size();
  c.gold = gold.size();
  for (const Segment& p : pred)
    for (const Segment& g : gold) {
      if (p.start != g.start || p.end != g.end) continue;
      if (task == EvalTask::kAds && p.sentiment != g.sentiment) continue;
      ++c.tp;
      break;  // segments in a set are non-overlapping, one match at most
    }
  return c;
}

EvalReport make_report(EvalTask task, const MatchCounts& c) {
  EvalReport r;
  r.task = task;
  r.tp = c.tp;
  r.predicted = c.predicted;
  r.gold = c.gold;
  r.precision = c.predicted == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.predicted);
  r.recall = c.gold == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.gold);
  r.micro_f1 = (r.precision + r.recall) == 0.0
                   ? 0.0
                   : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::string EvalReport::to_json() const {
  std::ostringstream os;
  os << "{\"task\":\"" << task_name(task) << "\",\"tp\":" << tp << ",\"pred\":" << predicted
     << ",\"gold\":" << gold << ",\"precision\":" << precision << ",\"recall\":" << recall
     << ",\"micro_f1\":" << micro_f1 << "}";
  return os.str();
}

CorpusEval evaluate_corpus(const Model& model, const std::vector<Sentence>& corpus) {
  MatchCounts ad, ads, bnd;
  std::size_t correct_tokens = 0, total_tokens = 0;
  for (const Sentence& s : corpus) {
    if (!s.unified_tags) throw std::invalid_argument("evaluate_corpus: corpus must be labeled");
    auto prediction = model.predict_all(s);
    const auto& predicted = prediction.unified;
    auto gold_segments = segments_from_tags(*s.unified_tags);
    auto pred_segments = segments_from_tags(predicted);
    ads += exact_match_counts(gold_segments, pred_segments, EvalTask::kAds);
    ad += exact_match_counts(gold_segments, pred_segments, EvalTask::kAd);
    auto head_segments = segments_from_tags(prediction.boundary);
    bnd += exact_match_counts(gold_segments, head_segments, EvalTask::kAd);
    for (std::size_t i = 0; i < predicted.size(); ++i)
      if (predicted[i] == (*s.unified_tags)[i]) ++correct_tokens;
    total_tokens += predicted.size();
  }
  CorpusEval out;
  out.ad = make_report(EvalTask::kAd, ad);
  out.ads = make_report(EvalTask::kAds, ads);
  out.boundary_head_ad = make_report(EvalTask::kAd, bnd);
  out.token_accuracy = total_tokens == 0 ? 0.0
                                         : static_cast<double>(correct_tokens) /
                                               static_cast<double>(total_tokens);
  return out;
}

}  // namespace crosstag

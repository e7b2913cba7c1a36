#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "crosstag/corpus.hpp"
#include "crosstag/synth.hpp"

using namespace crosstag;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SynthSpec one_template_spec(const char* aspect, const char* opinion, Sentiment polarity) {
  SynthSpec spec;
  spec.source_aspects = {aspect};
  spec.target_aspects = {"unrelated"};
  spec.opinions = {{opinion, polarity}};
  spec.templates = {"the <A> is <O>"};
  spec.distractors = {"thing"};
  spec.train_sentences = 1;
  spec.test_sentences = 1;
  spec.source_vocab_fraction = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("single-token aspect fills the template as S-<polarity>") {
  SynthCorpora c = generate_synth(one_template_spec("pizza", "great", Sentiment::kPos));
  REQUIRE(c.source_train.size() == 1);
  const Sentence& s = c.source_train[0];
  CHECK(s.tokens == std::vector<std::string>{"the", "pizza", "is", "great"});
  CHECK(*s.unified_tags == std::vector<UnifiedTag>{UnifiedTag::kO, UnifiedTag::kSPos, UnifiedTag::kO,
                                                   UnifiedTag::kO});
}

TEST_CASE("multiword aspects get B..E spans with the opinion's polarity") {
  SynthCorpora c = generate_synth(one_template_spec("battery life", "great", Sentiment::kPos));
  const Sentence& s = c.source_train[0];
  CHECK(s.tokens == std::vector<std::string>{"the", "battery", "life", "is", "great"});
  CHECK(*s.unified_tags == std::vector<UnifiedTag>{UnifiedTag::kO, UnifiedTag::kBPos,
                                                   UnifiedTag::kEPos, UnifiedTag::kO, UnifiedTag::kO});
}

TEST_CASE("negative opinions drive negative gold sentiment") {
  SynthCorpora c = generate_synth(one_template_spec("keyboard", "awful", Sentiment::kNeg));
  CHECK((*c.source_train[0].unified_tags)[1] == UnifiedTag::kSNeg);
}

TEST_CASE("overlapping aspect vocabularies are rejected") {
  SynthSpec spec = SynthSpec::defaults();
  spec.target_aspects.push_back("pizza");
  CHECK_THROWS_AS(generate_synth(spec), std::invalid_argument);
  SynthSpec multi = SynthSpec::defaults();
  multi.target_aspects.push_back("pizza toppings");  // token-level collision
  CHECK_THROWS_AS(generate_synth(multi), std::invalid_argument);
}

TEST_CASE("default corpus is well-formed, disjoint and lexicon-covered") {
  SynthSpec spec = SynthSpec::defaults();
  spec.train_sentences = 60;
  spec.test_sentences = 20;
  SynthCorpora c = generate_synth(spec);
  CHECK(c.source_train.size() == 60);
  CHECK(c.target_test.size() == 20);

  std::set<std::string> lexicon(c.lexicon_words.begin(), c.lexicon_words.end());
  CHECK(lexicon.size() == spec.opinions.size());

  std::set<std::string> source_aspect_tokens, target_tokens;
  for (const auto& a : spec.source_aspects) {
    std::istringstream ss(a);
    std::string t;
    while (ss >> t) source_aspect_tokens.insert(t);
  }
  for (const auto& corpus : {c.source_train, c.source_test})
    for (const Sentence& s : corpus) CHECK(valid_unified_sequence(*s.unified_tags));
  for (const auto& corpus : {c.target_train, c.target_test})
    for (const Sentence& s : corpus) {
      CHECK(valid_unified_sequence(*s.unified_tags));
      for (const std::string& t : s.tokens) {
        target_tokens.insert(t);
        CHECK(source_aspect_tokens.count(t) == 0);  // aspect vocabularies stay disjoint
      }
    }
  // held-out opinions appear in the target corpus only
  bool target_has_heldout = false;
  for (std::size_t i = 12; i < spec.opinions.size(); ++i)
    target_has_heldout |= target_tokens.count(spec.opinions[i].first) > 0;
  CHECK(target_has_heldout);
  for (const Sentence& s : c.source_train)
    for (const std::string& t : s.tokens)
      for (std::size_t i = 12; i < spec.opinions.size(); ++i) CHECK(t != spec.opinions[i].first);
}

TEST_CASE("emitted files reparse with zero repairs and are byte-stable per seed") {
  SynthSpec spec = SynthSpec::defaults();
  spec.train_sentences = 25;
  spec.test_sentences = 10;
  auto dir1 = std::filesystem::temp_directory_path() / "crosstag_synth_a";
  auto dir2 = std::filesystem::temp_directory_path() / "crosstag_synth_b";
  SynthPaths p1 = write_synth(spec, dir1.string());
  SynthPaths p2 = write_synth(spec, dir2.string());

  for (const std::string& path : {p1.source_train, p1.source_test, p1.target_train, p1.target_test}) {
    auto parsed = parse_conll(path);
    CHECK(parsed.repairs.empty());
    CHECK(!parsed.sentences.empty());
  }
  CHECK(slurp(p1.source_train) == slurp(p2.source_train));
  CHECK(slurp(p1.target_test) == slurp(p2.target_test));
  CHECK(slurp(p1.lexicon) == slurp(p2.lexicon));

  Lexicon lex = load_lexicon(p1.lexicon);
  CHECK(lex.count("great") == 1);

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);

  SynthSpec other = spec;
  other.seed = spec.seed + 1;
  SynthCorpora c1 = generate_synth(spec);
  SynthCorpora c2 = generate_synth(other);
  CHECK(c1.source_train[0].tokens != c2.source_train[0].tokens);
}

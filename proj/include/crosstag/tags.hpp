#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crosstag {

enum class Sentiment : std::uint8_t { kPos = 0, kNeg = 1, kNeu = 2 };

// 13 joint labels: O plus {B,I,E,S} x {POS,NEG,NEU}. Encoding is stable,
// O = 0, then position-major: B-POS=1 ... S-POS=4, B-NEG=5 ... S-NEU=12.
enum class UnifiedTag : std::uint8_t {
  kO = 0,
  kBPos = 1, kIPos = 2, kEPos = 3, kSPos = 4,
  kBNeg = 5, kINeg = 6, kENeg = 7, kSNeg = 8,
  kBNeu = 9, kINeu = 10, kENeu = 11, kSNeu = 12,
};

enum class BoundaryTag : std::uint8_t { kO = 0, kB = 1, kI = 2, kE = 3, kS = 4 };

constexpr std::size_t kNumUnifiedTags = 13;
constexpr std::size_t kNumBoundaryTags = 5;

const char* to_string(Sentiment s);
const char* to_string(UnifiedTag t);
const char* to_string(BoundaryTag t);
std::optional<UnifiedTag> unified_tag_from_string(const std::string& s);
std::optional<BoundaryTag> boundary_tag_from_string(const std::string& s);

UnifiedTag make_unified(BoundaryTag b, Sentiment s);  // b != O
BoundaryTag boundary_of(UnifiedTag t);
std::optional<Sentiment> sentiment_of(UnifiedTag t);

std::vector<BoundaryTag> unified_to_boundary(const std::vector<UnifiedTag>& tags);

// Inclusive token span; sentiment present for the unified task, absent for
// plain boundary spans.
struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<Sentiment> sentiment;

  bool operator==(const Segment& o) const = default;
};

// Left-to-right decoding with repairs for ill-formed sequences: a stray I/E
// opens a segment, a B inside an open segment closes the previous one at the
// prior token, an unclosed segment closes at the last in-segment token, and a
// segment's sentiment is its first tag's. Total on any input.
std::vector<Segment> segments_from_tags(const std::vector<UnifiedTag>& tags);
std::vector<Segment> segments_from_tags(const std::vector<BoundaryTag>& tags);

// Strict encoders; segments must be sorted, non-overlapping and in range.
std::vector<UnifiedTag> unified_from_segments(const std::vector<Segment>& segments, std::size_t length);
std::vector<BoundaryTag> boundary_from_segments(const std::vector<Segment>& segments, std::size_t length);

bool valid_unified_sequence(const std::vector<UnifiedTag>& tags);

}  // namespace crosstag

#include "crosstag/tags.hpp"

#include <stdexcept>

namespace crosstag {

const char* to_string(Sentiment s) {
  switch (s) {
    case Sentiment::kPos: return "POS";
    case Sentiment::kNeg: return "NEG";
    case Sentiment::kNeu: return "NEU";
  }
  return "?";
}

const char* to_string(UnifiedTag t) {
  static const char* names[kNumUnifiedTags] = {
      "O",     "B-POS", "I-POS", "E-POS", "S-POS", "B-NEG", "I-NEG",
      "E-NEG", "S-NEG", "B-NEU", "I-NEU", "E-NEU", "S-NEU"};
  return names[static_cast<std::size_t>(t)];
}

const char* to_string(BoundaryTag t) {
  static const char* names[kNumBoundaryTags] = {"O", "B", "I", "E", "S"};
  return names[static_cast<std::size_t>(t)];
}

std::optional<UnifiedTag> unified_tag_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kNumUnifiedTags; ++i)
    if (s == to_string(static_cast<UnifiedTag>(i))) return static_cast<UnifiedTag>(i);
  return std::nullopt;
}

std::optional<BoundaryTag> boundary_tag_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kNumBoundaryTags; ++i)
    if (s == to_string(static_cast<BoundaryTag>(i))) return static_cast<BoundaryTag>(i);
  return std::nullopt;
}

UnifiedTag make_unified(BoundaryTag b, Sentiment s) {
  if (b == BoundaryTag::kO) return UnifiedTag::kO;
  std::size_t pos = static_cast<std::size_t>(b) - 1;  // B=0, I=1, E=2, S=3
  return static_cast<UnifiedTag>(1 + 4 * static_cast<std::size_t>(s) + pos);
}

BoundaryTag boundary_of(UnifiedTag t) {
  if (t == UnifiedTag::kO) return BoundaryTag::kO;
  std::size_t idx = static_cast<std::size_t>(t) - 1;
  return static_cast<BoundaryTag>(1 + idx % 4);
}

std::optional<Sentiment> sentiment_of(UnifiedTag t) {
  if (t == UnifiedTag::kO) return std::nullopt;
  std::size_t idx = static_cast<std::size_t>(t) - 1;
  return static_cast<Sentiment>(idx / 4);
}

std::vector<BoundaryTag> unified_to_boundary(const std::vector<UnifiedTag>& tags) {
  std::vector<BoundaryTag> out;
  out.reserve(tags.size());
  for (UnifiedTag t : tags) out.push_back(boundary_of(t));
  return out;
}

namespace {

// Shared decoder over (boundary kind, optional sentiment) pairs.
std::vector<Segment> decode(const std::vector<BoundaryTag>& kinds,
                            const std::vector<std::optional<Sentiment>>& sents) {
  std::vector<Segment> out;
  bool open = false;
  std::size_t start = 0;
  std::optional<Sentiment> sent;
  auto close_at = [&](std::size_t end) {
    out.push_back(Segment{start, end, sent});
    open = false;
  };
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    switch (kinds[i]) {
      case BoundaryTag::kO:
        if (open) close_at(i - 1);
        break;
      case BoundaryTag::kB:
        if (open) close_at(i - 1);
        open = true;
        start = i;
        sent = sents[i];
        break;
      case BoundaryTag::kI:
        if (!open) {
          open = true;
          start = i;
          sent = sents[i];
        }
        break;
      case BoundaryTag::kE:
        if (!open) {
          open = true;
          start = i;
          sent = sents[i];
        }
        close_at(i);
        break;
      case BoundaryTag::kS:
        if (open) close_at(i - 1);
        out.push_back(Segment{i, i, sents[i]});
        break;
    }
  }
  if (open) close_at(kinds.size() - 1);
  return out;
}

}  // namespace

std::vector<Segment> segments_from_tags(const std::vector<UnifiedTag>& tags) {
  std::vector<BoundaryTag> kinds(tags.size());
  std::vector<std::optional<Sentiment>> sents(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    kinds[i] = boundary_of(tags[i]);
    sents[i] = sentiment_of(tags[i]);
  }
  return decode(kinds, sents);
}

std::vector<Segment> segments_from_tags(const std::vector<BoundaryTag>& tags) {
  return decode(tags, std::vector<std::optional<Sentiment>>(tags.size()));
}

namespace {

template <typename Tag, typename MakeTag>
std::vector<Tag> encode(const std::vector<Segment>& segments, std::size_t length, Tag o_tag,
                        MakeTag make) {
  std::vector<Tag> out(length, o_tag);
  std::size_t prev_end = 0;
  bool first = true;
  for (const Segment& s : segments) {
    if (s.start > s.end || s.end >= length)
      throw std::invalid_argument("tags_from_segments: segment out of range");
    if (!first && s.start <= prev_end)
      throw std::invalid_argument("tags_from_segments: overlapping or unsorted segments");
    first = false;
    prev_end = s.end;
    if (s.start == s.end) {
      out[s.start] = make(BoundaryTag::kS, s.sentiment);
    } else {
      out[s.start] = make(BoundaryTag::kB, s.sentiment);
      for (std::size_t i = s.start + 1; i < s.end; ++i) out[i] = make(BoundaryTag::kI, s.sentiment);
      out[s.end] = make(BoundaryTag::kE, s.sentiment);
    }
  }
  return out;
}

}  // namespace

std::vector<UnifiedTag> unified_from_segments(const std::vector<Segment>& segments, std::size_t length) {
  return encode<UnifiedTag>(segments, length, UnifiedTag::kO,
                            [](BoundaryTag b, std::optional<Sentiment> s) {
                              if (!s)
                                throw std::invalid_argument(
                                    "tags_from_segments: sentiment required for unified tags");
                              return make_unified(b, *s);
                            });
}

std::vector<BoundaryTag> boundary_from_segments(const std::vector<Segment>& segments, std::size_t length) {
  return encode<BoundaryTag>(segments, length, BoundaryTag::kO,
                             [](BoundaryTag b, std::optional<Sentiment>) { return b; });
}

bool valid_unified_sequence(const std::vector<UnifiedTag>& tags) {
  // Valid iff re-encoding the decoded segments reproduces the input.
  auto segments = segments_from_tags(tags);
  for (const Segment& s : segments)
    if (!s.sentiment) return false;
  try {
    return unified_from_segments(segments, tags.size()) == tags;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace crosstag

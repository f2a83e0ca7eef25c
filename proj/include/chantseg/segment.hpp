#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chantseg {

// Dense tone id in 0..alphabet_size-1. The tone model reserves id
// alphabet_size for its end-of-segment marker.
using ToneId = std::int32_t;

// A segment of up to 7 tones packed into 64 bits: byte 0 holds the length,
// byte i holds tone i-1. Two markers use length bytes no segment can have.
using SegmentKey = std::uint64_t;

inline constexpr int kMaxPackedLength = 7;
inline constexpr int kMaxAlphabetSize = 255;
inline constexpr SegmentKey kBeginOfMelody = 0xFE;
inline constexpr SegmentKey kEndOfMelody = 0xFF;

SegmentKey pack_segment(std::span<const ToneId> tones);
int segment_length(SegmentKey key);
std::vector<ToneId> unpack_segment(SegmentKey key);
inline bool is_marker(SegmentKey key) { return key == kBeginOfMelody || key == kEndOfMelody; }

// A partition of a tone sequence into contiguous segments, stored as lengths.
struct Segmentation {
  std::vector<int> lengths;

  std::size_t size() const { return lengths.size(); }
  int total_length() const;
  // Positions p (1..n-1) where a cut falls before tone p.
  std::vector<int> cuts() const;
  static Segmentation from_cuts(int n, std::span<const int> cuts);
  bool operator==(const Segmentation&) const = default;
};

// Checks the cover invariant and the length cap; returns an empty string if
// valid.
std::string validate_segmentation(const Segmentation& seg, std::size_t n_tones, int max_length);

std::vector<SegmentKey> segment_keys(std::span<const ToneId> tones, const Segmentation& seg);

// Segments as tone-id vectors (no length cap).
std::vector<std::vector<ToneId>> split_tones(std::span<const ToneId> tones,
                                             const Segmentation& seg);

}  // namespace chantseg

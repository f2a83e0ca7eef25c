#include "chantseg/segment.hpp"

#include <sstream>

#include "chantseg/errors.hpp"

namespace chantseg {

SegmentKey pack_segment(std::span<const ToneId> tones) {
  if (tones.empty() || tones.size() > static_cast<std::size_t>(kMaxPackedLength))
    throw SegmentTooLong("segment length " + std::to_string(tones.size()) +
                         " outside 1.." + std::to_string(kMaxPackedLength));
  SegmentKey key = tones.size();
  for (std::size_t i = 0; i < tones.size(); ++i) {
    if (tones[i] < 0 || tones[i] >= kMaxAlphabetSize)
      throw Error("tone id out of range: " + std::to_string(tones[i]));
    key |= static_cast<SegmentKey>(tones[i]) << (8 * (i + 1));
  }
  return key;
}

int segment_length(SegmentKey key) {
  if (is_marker(key)) return 0;
  return static_cast<int>(key & 0xFF);
}

std::vector<ToneId> unpack_segment(SegmentKey key) {
  const int n = segment_length(key);
  std::vector<ToneId> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = static_cast<ToneId>((key >> (8 * (i + 1))) & 0xFF);
  return out;
}

int Segmentation::total_length() const {
  int n = 0;
  for (int l : lengths) n += l;
  return n;
}

std::vector<int> Segmentation::cuts() const {
  std::vector<int> out;
  int pos = 0;
  for (std::size_t i = 0; i + 1 < lengths.size(); ++i) {
    pos += lengths[i];
    out.push_back(pos);
  }
  return out;
}

Segmentation Segmentation::from_cuts(int n, std::span<const int> cuts) {
  Segmentation seg;
  int prev = 0;
  for (int c : cuts) {
    if (c <= prev || c >= n) throw Error("cut positions must be strictly increasing in 1..n-1");
    seg.lengths.push_back(c - prev);
    prev = c;
  }
  if (n > 0) seg.lengths.push_back(n - prev);
  return seg;
}

std::string validate_segmentation(const Segmentation& seg, std::size_t n_tones, int max_length) {
  std::ostringstream err;
  if (static_cast<std::size_t>(seg.total_length()) != n_tones)
    err << "segments cover " << seg.total_length() << " tones, chant has " << n_tones << "; ";
  for (int l : seg.lengths)
    if (l < 1 || l > max_length) err << "segment length " << l << " outside 1.." << max_length << "; ";
  return err.str();
}

std::vector<SegmentKey> segment_keys(std::span<const ToneId> tones, const Segmentation& seg) {
  std::vector<SegmentKey> keys;
  keys.reserve(seg.size());
  std::size_t pos = 0;
  for (int l : seg.lengths) {
    keys.push_back(pack_segment(tones.subspan(pos, static_cast<std::size_t>(l))));
    pos += static_cast<std::size_t>(l);
  }
  return keys;
}

std::vector<std::vector<ToneId>> split_tones(std::span<const ToneId> tones,
                                             const Segmentation& seg) {
  std::vector<std::vector<ToneId>> out;
  std::size_t pos = 0;
  for (int l : seg.lengths) {
    out.emplace_back(tones.begin() + static_cast<std::ptrdiff_t>(pos),
                     tones.begin() + static_cast<std::ptrdiff_t>(pos + l));
    pos += static_cast<std::size_t>(l);
  }
  return out;
}

}  // namespace chantseg

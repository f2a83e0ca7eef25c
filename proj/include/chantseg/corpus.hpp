#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "chantseg/errors.hpp"
#include "chantseg/segment.hpp"

namespace chantseg {

enum class Genre { antiphon, responsory };
enum class Encoding { pitch, interval };

std::string_view to_string(Genre g);
std::string_view to_string(Encoding e);
Genre parse_genre(std::string_view s);
Encoding parse_encoding(std::string_view s);
// Accepts "antiphon", "a", "genre_a" (and the responsory equivalents).
std::optional<Genre> genre_from_field(std::string_view s);

struct ChantRecord {
  std::string record_id;
  std::string cantus_id;
  std::string source_id;
  std::optional<Genre> genre;
  std::string mode_raw;
  std::string volpiano_raw;
  // Completeness flag, when the CSV provides one.
  std::optional<bool> complete;
};

// Boundaries are cut positions p (1 <= p <= n-1): the boundary sits after
// tone p-1. Every word boundary is also a syllable boundary.
struct Chant {
  std::string record_id;
  std::string cantus_id;
  std::string source_id;
  Genre genre = Genre::antiphon;
  int mode = 1;
  Encoding encoding = Encoding::pitch;
  // Gamut indices for pitch encoding, signed step differences for intervals.
  std::vector<int> tones;
  std::vector<int> syllable_boundaries;
  std::vector<int> word_boundaries;
  bool has_boundaries = true;

  bool operator==(const Chant&) const = default;
};

// Volpiano pitch letters in ascending order: 9, a-h, j-s.
inline constexpr std::string_view kGamut = "9abcdefghjklmnopqrs";

// Gamut index of a Volpiano pitch letter (liquescent forms included), or -1.
int gamut_index(char c);
char gamut_letter(int index);

struct CleaningConfig {
  bool strict = false;
  // Barline characters that can start a differentia.
  std::string full_barlines = "4";
  bool strip_differentia = true;
};

struct ParsedMelody {
  std::vector<int> pitches;  // gamut indices
  std::vector<int> syllable_boundaries;
  std::vector<int> word_boundaries;
};

ParsedMelody parse_volpiano(std::string_view raw, const CleaningConfig& rules = {});

// Drops everything after the first full barline that is followed by more
// pitch material. Returns the input unchanged otherwise.
std::string strip_differentia(std::string_view volpiano, const CleaningConfig& rules = {});

// Cleaned Volpiano for a pitch chant: one hyphen between notes, two at
// syllable and three at word boundaries.
std::string to_volpiano(const Chant& chant);

Chant to_intervals(const Chant& pitch_chant);

// Dense tone ids for a set of tone values.
class ToneAlphabet {
 public:
  static ToneAlphabet pitch();
  // Observed step differences plus every value in [-bound, bound].
  static ToneAlphabet interval(const std::vector<Chant>& chants, int bound);
  static ToneAlphabet from_values(Encoding encoding, std::vector<int> values);

  Encoding encoding() const { return encoding_; }
  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<int>& values() const { return values_; }
  std::optional<ToneId> id(int value) const;
  int value(ToneId id) const { return values_.at(static_cast<std::size_t>(id)); }
  std::string symbol(ToneId id) const { return symbol_of(encoding_, value(id)); }
  std::vector<std::string> symbols() const;

  // Throws UnknownCharacter when a tone is outside the alphabet.
  std::vector<ToneId> encode(const Chant& chant) const;
  bool covers(const Chant& chant) const;

  static std::string symbol_of(Encoding e, int value);
  static int value_of(Encoding e, std::string_view symbol);

 private:
  Encoding encoding_ = Encoding::pitch;
  std::vector<int> values_;
};

struct CsvColumns {
  std::string id = "id";
  std::string cantus_id = "cantus_id";
  std::string mode = "mode";
  std::string genre = "genre_id";
  std::string volpiano = "volpiano";
  std::string source = "source_id";
  // Empty: no completeness column.
  std::string complete;
};

// Parses RFC 4180 CSV with a header row.
std::vector<std::vector<std::string>> read_csv_rows(std::istream& in);
std::vector<ChantRecord> read_records(std::istream& in, const CsvColumns& columns = {});

struct FilterRules {
  Genre genre = Genre::antiphon;
  Encoding encoding = Encoding::pitch;
  // Keeps records whose source id equals or starts with this; empty keeps all.
  std::string source;
  CleaningConfig cleaning{};
};

struct FilterResult {
  std::vector<Chant> chants;
  std::map<std::string, std::int64_t> dropped;
  std::int64_t total = 0;
  std::int64_t kept() const { return static_cast<std::int64_t>(chants.size()); }
};

FilterResult filter_corpus(const std::vector<ChantRecord>& records, const FilterRules& rules);

struct Fraction {
  std::int64_t num = 7;
  std::int64_t den = 10;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // "7/10" or a decimal such as "0.7".
  static Fraction parse(std::string_view s);
};

enum class Grouping { record, cantus_id };

struct SplitSpec {
  Fraction train_fraction{7, 10};
  Fraction validation_fraction{1, 10};
  std::uint64_t seed = 0;
  Grouping grouping = Grouping::record;
};

struct Split {
  std::vector<Chant> train;
  std::vector<Chant> validation;
  std::vector<Chant> test;
};

Split split_corpus(const std::vector<Chant>& chants, const SplitSpec& spec);

void write_chants_jsonl(std::ostream& out, const std::vector<Chant>& chants);
std::vector<Chant> read_chants_jsonl(std::istream& in);

}  // namespace chantseg

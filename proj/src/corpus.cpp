#include "chantseg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "chantseg/random.hpp"

namespace chantseg {

std::string_view to_string(Genre g) { return g == Genre::antiphon ? "antiphon" : "responsory"; }
std::string_view to_string(Encoding e) { return e == Encoding::pitch ? "pitch" : "interval"; }

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool is_known_non_pitch(char c) {
  if (c >= '1' && c <= '7') return true;  // clefs and barlines
  switch (c) {
    case '-':
    case ' ':
    case 'i': case 'w': case 'x': case 'y': case 'z':
    case 'I': case 'W': case 'X': case 'Y': case 'Z':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::optional<Genre> genre_from_field(std::string_view s) {
  const std::string g = lower(trim(s));
  if (g == "antiphon" || g == "a" || g == "genre_a") return Genre::antiphon;
  if (g == "responsory" || g == "r" || g == "genre_r") return Genre::responsory;
  return std::nullopt;
}

Genre parse_genre(std::string_view s) {
  auto g = genre_from_field(s);
  if (!g) throw Error("unknown genre '" + std::string(s) + "'");
  return *g;
}

Encoding parse_encoding(std::string_view s) {
  const std::string e = lower(trim(s));
  if (e == "pitch") return Encoding::pitch;
  if (e == "interval") return Encoding::interval;
  throw Error("unknown encoding '" + std::string(s) + "'");
}

int gamut_index(char c) {
  if (c == ')') c = '9';
  if (c >= 'A' && c <= 'S' && c != 'I') c = static_cast<char>(c - 'A' + 'a');
  const auto pos = kGamut.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

char gamut_letter(int index) {
  if (index < 0 || index >= static_cast<int>(kGamut.size())) throw Error("gamut index out of range");
  return kGamut[static_cast<std::size_t>(index)];
}

ParsedMelody parse_volpiano(std::string_view raw, const CleaningConfig& rules) {
  ParsedMelody out;
  int gap_run = 0;  // longest hyphen run since the previous pitch
  int run = 0;
  for (char c : raw) {
    const int g = gamut_index(c);
    if (g >= 0) {
      if (!out.pitches.empty()) {
        const int p = static_cast<int>(out.pitches.size());
        if (gap_run >= 2) out.syllable_boundaries.push_back(p);
        if (gap_run >= 3) out.word_boundaries.push_back(p);
      }
      out.pitches.push_back(g);
      gap_run = run = 0;
      continue;
    }
    if (c == '-') {
      gap_run = std::max(gap_run, ++run);
      continue;
    }
    run = 0;
    if (rules.strict && !is_known_non_pitch(c))
      throw UnknownCharacter(std::string("unexpected character '") + c + "' in Volpiano");
  }
  if (out.pitches.empty()) throw EmptyMelody();
  return out;
}

std::string strip_differentia(std::string_view volpiano, const CleaningConfig& rules) {
  const auto bar = volpiano.find_first_of(rules.full_barlines);
  if (bar == std::string_view::npos) return std::string(volpiano);
  const auto rest = volpiano.substr(bar + 1);
  const bool more = std::any_of(rest.begin(), rest.end(), [](char c) { return gamut_index(c) >= 0; });
  return std::string(more ? volpiano.substr(0, bar + 1) : volpiano);
}

std::string to_volpiano(const Chant& chant) {
  if (chant.encoding != Encoding::pitch) throw NotApplicable("Volpiano needs pitch encoding");
  const std::set<int> syl(chant.syllable_boundaries.begin(), chant.syllable_boundaries.end());
  const std::set<int> word(chant.word_boundaries.begin(), chant.word_boundaries.end());
  std::string out = "1---";
  for (std::size_t i = 0; i < chant.tones.size(); ++i) {
    const int p = static_cast<int>(i);
    if (i > 0) out += word.count(p) ? "---" : syl.count(p) ? "--" : "-";
    out += gamut_letter(chant.tones[i]);
  }
  return out;
}

Chant to_intervals(const Chant& pitch_chant) {
  if (pitch_chant.encoding != Encoding::pitch) throw Error("to_intervals needs a pitch chant");
  Chant out = pitch_chant;
  out.encoding = Encoding::interval;
  out.tones.clear();
  for (std::size_t i = 1; i < pitch_chant.tones.size(); ++i)
    out.tones.push_back(pitch_chant.tones[i] - pitch_chant.tones[i - 1]);
  const int m = static_cast<int>(out.tones.size());
  auto shift = [m](const std::vector<int>& cuts) {
    std::vector<int> r;
    for (int p : cuts)
      if (p - 1 >= 1 && p - 1 <= m - 1) r.push_back(p - 1);
    return r;
  };
  out.syllable_boundaries = shift(pitch_chant.syllable_boundaries);
  out.word_boundaries = shift(pitch_chant.word_boundaries);
  return out;
}

// ---------------------------------------------------------------- alphabet

ToneAlphabet ToneAlphabet::from_values(Encoding encoding, std::vector<int> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty()) throw Error("empty tone alphabet");
  if (static_cast<int>(values.size()) > kMaxAlphabetSize) throw Error("tone alphabet too large");
  ToneAlphabet a;
  a.encoding_ = encoding;
  a.values_ = std::move(values);
  return a;
}

ToneAlphabet ToneAlphabet::pitch() {
  std::vector<int> v(kGamut.size());
  std::iota(v.begin(), v.end(), 0);
  return from_values(Encoding::pitch, std::move(v));
}

ToneAlphabet ToneAlphabet::interval(const std::vector<Chant>& chants, int bound) {
  std::vector<int> v;
  for (int s = -bound; s <= bound; ++s) v.push_back(s);
  for (const Chant& c : chants) v.insert(v.end(), c.tones.begin(), c.tones.end());
  return from_values(Encoding::interval, std::move(v));
}

std::optional<ToneId> ToneAlphabet::id(int value) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), value);
  if (it == values_.end() || *it != value) return std::nullopt;
  return static_cast<ToneId>(it - values_.begin());
}

std::vector<std::string> ToneAlphabet::symbols() const {
  std::vector<std::string> out;
  for (int v : values_) out.push_back(symbol_of(encoding_, v));
  return out;
}

std::vector<ToneId> ToneAlphabet::encode(const Chant& chant) const {
  if (chant.encoding != encoding_) throw Error("chant encoding does not match the alphabet");
  std::vector<ToneId> out;
  out.reserve(chant.tones.size());
  for (int t : chant.tones) {
    auto i = id(t);
    if (!i) throw UnknownCharacter("tone " + symbol_of(encoding_, t) + " is outside the alphabet");
    out.push_back(*i);
  }
  return out;
}

bool ToneAlphabet::covers(const Chant& chant) const {
  return chant.encoding == encoding_ &&
         std::all_of(chant.tones.begin(), chant.tones.end(), [&](int t) { return id(t).has_value(); });
}

std::string ToneAlphabet::symbol_of(Encoding e, int value) {
  if (e == Encoding::pitch) return std::string(1, gamut_letter(value));
  if (value > 0) return "+" + std::to_string(value);
  return std::to_string(value);
}

int ToneAlphabet::value_of(Encoding e, std::string_view symbol) {
  if (e == Encoding::pitch) {
    const int g = symbol.size() == 1 ? gamut_index(symbol[0]) : -1;
    if (g < 0) throw FormatError("bad pitch symbol '" + std::string(symbol) + "'");
    return g;
  }
  if (!symbol.empty() && symbol[0] == '+') symbol.remove_prefix(1);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(symbol.data(), symbol.data() + symbol.size(), v);
  if (ec != std::errc() || ptr != symbol.data() + symbol.size())
    throw FormatError("bad interval symbol '" + std::string(symbol) + "'");
  return v;
}

// --------------------------------------------------------------------- CSV

std::vector<std::vector<std::string>> read_csv_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  if (any && (!field.empty() || !row.empty())) end_row();
  // Strip a UTF-8 byte order mark from the first header cell.
  if (!rows.empty() && !rows[0].empty() && rows[0][0].rfind("\xEF\xBB\xBF", 0) == 0)
    rows[0][0].erase(0, 3);
  return rows;
}

std::vector<ChantRecord> read_records(std::istream& in, const CsvColumns& columns) {
  const auto rows = read_csv_rows(in);
  if (rows.empty()) throw FormatError("CSV has no header row");
  const auto& header = rows[0];
  auto col = [&](const std::string& name, bool required) -> int {
    if (name.empty()) return -1;
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw FormatError("CSV is missing column '" + name + "'");
      return -1;
    }
    return static_cast<int>(it - header.begin());
  };
  const int id = col(columns.id, true), cid = col(columns.cantus_id, false),
            mode = col(columns.mode, true), genre = col(columns.genre, true),
            volp = col(columns.volpiano, true), src = col(columns.source, false),
            complete = col(columns.complete, !columns.complete.empty());
  auto get = [](const std::vector<std::string>& r, int i) {
    return i >= 0 && i < static_cast<int>(r.size()) ? r[static_cast<std::size_t>(i)] : std::string();
  };
  std::vector<ChantRecord> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    ChantRecord rec;
    rec.record_id = trim(get(r, id));
    if (rec.record_id.empty()) rec.record_id = "row" + std::to_string(i);
    if (!seen.insert(rec.record_id).second)
      throw FormatError("duplicate record id '" + rec.record_id + "'");
    rec.cantus_id = trim(get(r, cid));
    rec.source_id = trim(get(r, src));
    rec.genre = genre_from_field(get(r, genre));
    rec.mode_raw = trim(get(r, mode));
    rec.volpiano_raw = get(r, volp);
    if (complete >= 0) {
      const std::string v = lower(trim(get(r, complete)));
      if (!v.empty()) rec.complete = v == "1" || v == "true" || v == "yes" || v == "t";
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// ------------------------------------------------------------------ filter

FilterResult filter_corpus(const std::vector<ChantRecord>& records, const FilterRules& rules) {
  FilterResult res;
  res.total = static_cast<std::int64_t>(records.size());
  for (const char* rule : {"genre", "source", "mode", "incomplete", "empty_melody",
                           "unknown_character", "too_short"})
    res.dropped[rule] = 0;
  for (const ChantRecord& r : records) {
    if (r.genre != rules.genre) {
      ++res.dropped["genre"];
      continue;
    }
    if (!rules.source.empty() && r.source_id.rfind(rules.source, 0) != 0) {
      ++res.dropped["source"];
      continue;
    }
    const std::string& m = r.mode_raw;
    if (m.size() != 1 || m[0] < '1' || m[0] > '8') {
      ++res.dropped["mode"];
      continue;
    }
    if (r.complete && !*r.complete) {
      ++res.dropped["incomplete"];
      continue;
    }
    std::string volpiano = r.volpiano_raw;
    if (rules.genre == Genre::antiphon && rules.cleaning.strip_differentia)
      volpiano = strip_differentia(volpiano, rules.cleaning);
    ParsedMelody parsed;
    try {
      parsed = parse_volpiano(volpiano, rules.cleaning);
    } catch (const EmptyMelody&) {
      ++res.dropped["empty_melody"];
      continue;
    } catch (const UnknownCharacter&) {
      ++res.dropped["unknown_character"];
      continue;
    }
    Chant c;
    c.record_id = r.record_id;
    c.cantus_id = r.cantus_id;
    c.source_id = r.source_id;
    c.genre = rules.genre;
    c.mode = m[0] - '0';
    c.tones = std::move(parsed.pitches);
    c.syllable_boundaries = std::move(parsed.syllable_boundaries);
    c.word_boundaries = std::move(parsed.word_boundaries);
    if (rules.encoding == Encoding::interval) {
      c = to_intervals(c);
      if (c.tones.empty()) {
        ++res.dropped["too_short"];
        continue;
      }
    }
    res.chants.push_back(std::move(c));
  }
  return res;
}

// ------------------------------------------------------------------- split

Fraction Fraction::parse(std::string_view s) {
  const std::string t = trim(s);
  Fraction f{};
  const auto slash = t.find('/');
  if (slash != std::string::npos) {
    f.num = std::stoll(t.substr(0, slash));
    f.den = std::stoll(t.substr(slash + 1));
  } else {
    const auto dot = t.find('.');
    const std::string digits = dot == std::string::npos ? t : t.substr(0, dot) + t.substr(dot + 1);
    f.num = std::stoll(digits);
    f.den = 1;
    if (dot != std::string::npos)
      for (std::size_t i = dot + 1; i < t.size(); ++i) f.den *= 10;
  }
  if (f.den <= 0 || f.num <= 0 || f.num >= f.den)
    throw Error("fraction must lie strictly between 0 and 1: '" + t + "'");
  const std::int64_t g = std::gcd(f.num, f.den);
  f.num /= g;
  f.den /= g;
  return f;
}

Split split_corpus(const std::vector<Chant>& chants, const SplitSpec& spec) {
  for (const Fraction& f : {spec.train_fraction, spec.validation_fraction})
    if (f.den <= 0 || f.num <= 0 || f.num >= f.den) throw Error("split fractions must be in (0, 1)");

  std::vector<std::size_t> order(chants.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return chants[a].record_id < chants[b].record_id; });

  std::map<std::string, std::vector<std::size_t>> by_key;
  for (std::size_t i : order) {
    const Chant& c = chants[i];
    const std::string& key =
        spec.grouping == Grouping::cantus_id && !c.cantus_id.empty() ? c.cantus_id : c.record_id;
    by_key[(spec.grouping == Grouping::cantus_id && !c.cantus_id.empty() ? "c:" : "r:") + key].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [k, v] : by_key) groups.push_back(&v);
  Rng rng(spec.seed, "split");
  for (std::size_t i = groups.size(); i > 1; --i) std::swap(groups[i - 1], groups[rng.uniform_index(i)]);

  const auto n = static_cast<std::int64_t>(chants.size());
  const std::int64_t train_target =
      (n * spec.train_fraction.num * 2 + spec.train_fraction.den) / (2 * spec.train_fraction.den);
  std::vector<const std::vector<std::size_t>*> train_groups, test_groups;
  std::int64_t train_count = 0;
  for (const auto* g : groups) {
    if (train_count < train_target) {
      train_groups.push_back(g);
      train_count += static_cast<std::int64_t>(g->size());
    } else {
      test_groups.push_back(g);
    }
  }
  const std::int64_t val_target =
      (train_count * spec.validation_fraction.num + spec.validation_fraction.den - 1) /
      spec.validation_fraction.den;
  std::vector<bool> is_val(chants.size(), false), is_train(chants.size(), false);
  std::int64_t val_count = 0;
  for (const auto* g : train_groups) {
    const bool val = val_count < val_target;
    for (std::size_t i : *g) (val ? is_val : is_train)[i] = true;
    if (val) val_count += static_cast<std::int64_t>(g->size());
  }
  Split out;
  for (std::size_t i : order) {
    if (is_train[i]) out.train.push_back(chants[i]);
    else if (is_val[i]) out.validation.push_back(chants[i]);
    else out.test.push_back(chants[i]);
  }
  if (out.train.empty() || out.validation.empty() || out.test.empty())
    throw DegenerateSplit("split leaves a partition empty (train " + std::to_string(out.train.size()) +
                          ", validation " + std::to_string(out.validation.size()) + ", test " +
                          std::to_string(out.test.size()) + ")");
  return out;
}

// ------------------------------------------------------------------- JSONL

void write_chants_jsonl(std::ostream& out, const std::vector<Chant>& chants) {
  for (const Chant& c : chants) {
    nlohmann::json j;
    j["record_id"] = c.record_id;
    j["cantus_id"] = c.cantus_id;
    j["source_id"] = c.source_id;
    j["genre"] = std::string(to_string(c.genre));
    j["mode"] = c.mode;
    j["encoding"] = std::string(to_string(c.encoding));
    std::vector<std::string> tones;
    for (int t : c.tones) tones.push_back(ToneAlphabet::symbol_of(c.encoding, t));
    j["tones"] = tones;
    j["syllable_boundaries"] = c.syllable_boundaries;
    j["word_boundaries"] = c.word_boundaries;
    out << j.dump() << '\n';
  }
}

std::vector<Chant> read_chants_jsonl(std::istream& in) {
  std::vector<Chant> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Chant c;
      c.record_id = j.at("record_id").get<std::string>();
      c.cantus_id = j.value("cantus_id", "");
      c.source_id = j.value("source_id", "");
      c.genre = parse_genre(j.at("genre").get<std::string>());
      c.mode = j.at("mode").get<int>();
      if (c.mode < 1 || c.mode > 8) throw FormatError("mode out of range");
      c.encoding = parse_encoding(j.at("encoding").get<std::string>());
      for (const auto& t : j.at("tones")) c.tones.push_back(ToneAlphabet::value_of(c.encoding, t.get<std::string>()));
      if (c.tones.empty()) throw EmptyMelody();
      c.has_boundaries = j.contains("syllable_boundaries");
      c.syllable_boundaries = j.value("syllable_boundaries", std::vector<int>{});
      c.word_boundaries = j.value("word_boundaries", std::vector<int>{});
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace chantseg

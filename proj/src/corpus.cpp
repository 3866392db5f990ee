/*
 * Copyright 2026 The negminer Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "negminer/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <json.hpp>

#include "negminer/common.hpp"

namespace negminer::corpus {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw Error("corpus", message); }

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& message) {
  fail(path.filename().string() + " line " + std::to_string(line) + ": " + message);
}

void check_id(const std::filesystem::path& path, std::size_t line, const std::string& id) {
  if (id.empty()) fail_line(path, line, "empty id");
  if (id.find_first_of("\t\n\r") != std::string::npos) {
    fail_line(path, line, "id contains tab or newline: " + id);
  }
}

// Splits raw file content into lines; a trailing newline does not create an
// extra empty record, but interior blank lines are reported as malformed.
std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

struct JsonRecord {
  std::string id;
  std::string text;
  std::map<std::string, std::string> meta;
};

JsonRecord parse_record(const std::filesystem::path& path, std::size_t line_no,
                        std::string_view line) {
  ordered_json obj = ordered_json::parse(line, nullptr, false);
  if (obj.is_discarded()) fail_line(path, line_no, "malformed JSON");
  if (!obj.is_object()) fail_line(path, line_no, "expected a JSON object");

  JsonRecord rec;
  if (!obj.contains("id")) fail_line(path, line_no, "missing field \"id\"");
  if (!obj["id"].is_string()) fail_line(path, line_no, "field \"id\" must be a string");
  rec.id = obj["id"].get<std::string>();

  if (!obj.contains("text")) fail_line(path, line_no, "missing field \"text\"");
  if (!obj["text"].is_string()) fail_line(path, line_no, "field \"text\" must be a string");
  rec.text = obj["text"].get<std::string>();

  if (obj.contains("meta")) {
    if (!obj["meta"].is_object()) fail_line(path, line_no, "field \"meta\" must be an object");
    for (const auto& [key, value] : obj["meta"].items()) {
      if (!value.is_string()) {
        fail_line(path, line_no, "meta value for \"" + key + "\" must be a string");
      }
      rec.meta[key] = value.get<std::string>();
    }
  }
  return rec;
}

}  // namespace

const Document* DocumentSet::find(std::string_view id) const {
  auto it = index.find(std::string(id));
  return it == index.end() ? nullptr : &docs[it->second];
}

std::vector<std::string> DocumentSet::ids() const {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.id);
  return out;
}

const Query* QuerySet::find(std::string_view id) const {
  auto it = index.find(std::string(id));
  return it == index.end() ? nullptr : &queries[it->second];
}

const std::vector<std::string>& QrelSet::positives_for(const std::string& query_id) const {
  static const std::vector<std::string> empty;
  auto it = positives.find(query_id);
  return it == positives.end() ? empty : it->second;
}

DocumentSet load_documents(const std::filesystem::path& path, const LoadOptions& options) {
  std::string content = read_file(path);
  DocumentSet set;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(content)) {
    ++line_no;
    JsonRecord rec = parse_record(path, line_no, line);
    check_id(path, line_no, rec.id);
    if (rec.text.empty() && !options.allow_empty_text) {
      fail_line(path, line_no, "empty text for id " + rec.id);
    }
    auto [it, inserted] = set.index.emplace(rec.id, set.docs.size());
    if (!inserted) fail_line(path, line_no, "duplicate id: " + rec.id);
    set.docs.push_back({std::move(rec.id), std::move(rec.text), std::move(rec.meta)});
  }
  return set;
}

QuerySet load_queries(const std::filesystem::path& path) {
  std::string content = read_file(path);
  QuerySet set;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(content)) {
    ++line_no;
    JsonRecord rec = parse_record(path, line_no, line);
    check_id(path, line_no, rec.id);
    if (rec.text.empty()) fail_line(path, line_no, "empty query text for id " + rec.id);
    auto [it, inserted] = set.index.emplace(rec.id, set.queries.size());
    if (!inserted) fail_line(path, line_no, "duplicate id: " + rec.id);
    set.queries.push_back({std::move(rec.id), std::move(rec.text)});
  }
  return set;
}

void save_documents(const DocumentSet& set, const std::filesystem::path& path) {
  std::string out;
  for (const auto& doc : set.docs) {
    ordered_json obj;
    obj["id"] = doc.id;
    obj["text"] = doc.text;
    if (!doc.meta.empty()) obj["meta"] = doc.meta;
    out += obj.dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

QrelSet load_qrels(const std::filesystem::path& path, const QuerySet& queries,
                   const DocumentSet& corpus) {
  std::string content = read_file(path);
  QrelSet set;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(content)) {
    ++line_no;
    auto cols = split(line, '\t');
    if (cols.size() != 2 && cols.size() != 3) {
      fail_line(path, line_no, "expected 2 or 3 tab-separated columns");
    }
    QrelPair pair;
    pair.query_id = cols[0];
    pair.doc_id = cols[1];
    if (pair.query_id.empty() || pair.doc_id.empty()) {
      fail_line(path, line_no, "empty query_id or doc_id");
    }
    if (cols.size() == 3) {
      const std::string& g = cols[2];
      auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), pair.grade);
      if (ec != std::errc{} || ptr != g.data() + g.size()) {
        fail_line(path, line_no, "non-integer grade: " + g);
      }
    }
    if (!queries.find(pair.query_id)) {
      fail_line(path, line_no, "unknown query_id: " + pair.query_id);
    }
    if (!corpus.find(pair.doc_id)) {
      fail_line(path, line_no, "unknown doc_id: " + pair.doc_id);
    }
    // Rows graded below 1 are accepted input but are not positives.
    if (pair.grade < 1) continue;
    if (!seen.emplace(pair.query_id, pair.doc_id).second) {
      fail_line(path, line_no, "duplicate pair: " + pair.query_id + ", " + pair.doc_id);
    }
    set.positives[pair.query_id].push_back(pair.doc_id);
    set.pairs.push_back(std::move(pair));
  }
  return set;
}

namespace {

// Decodes one UTF-8 code point; on malformed input consumes a single byte
// and returns U+FFFD so the byte acts as a separator.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  auto cont = [&](std::size_t k) {
    return k < s.size() && (byte(k) & 0xC0u) == 0x80u;
  };
  if ((b0 & 0xE0u) == 0xC0u && cont(i + 1)) {
    char32_t cp = (char32_t(b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
    i += 2;
    return cp < 0x80 ? 0xFFFD : cp;
  }
  if ((b0 & 0xF0u) == 0xE0u && cont(i + 1) && cont(i + 2)) {
    char32_t cp = (char32_t(b0 & 0x0Fu) << 12) | (char32_t(byte(i + 1) & 0x3Fu) << 6) |
                  (byte(i + 2) & 0x3Fu);
    i += 3;
    return cp < 0x800 ? 0xFFFD : cp;
  }
  if ((b0 & 0xF8u) == 0xF0u && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
    char32_t cp = (char32_t(b0 & 0x07u) << 18) | (char32_t(byte(i + 1) & 0x3Fu) << 12) |
                  (char32_t(byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
    i += 4;
    return (cp < 0x10000 || cp > 0x10FFFF) ? 0xFFFD : cp;
  }
  i += 1;
  return 0xFFFD;
}

struct Range {
  char32_t lo, hi;
};

// Alphanumeric ranges for the major scripts. An approximation of the full
// Unicode property tables; anything outside is a token separator.
constexpr Range kAlnumRanges[] = {
    {U'0', U'9'},       {U'A', U'Z'},       {U'a', U'z'},
    {0x00C0, 0x00D6},   {0x00D8, 0x00F6},   {0x00F8, 0x02AF},  // Latin-1 + extended
    {0x0386, 0x0386},   {0x0388, 0x03FF},                      // Greek
    {0x0400, 0x04FF},                                          // Cyrillic
    {0x0531, 0x0556},   {0x0561, 0x0587},                      // Armenian
    {0x05D0, 0x05EA},                                          // Hebrew
    {0x0620, 0x064A},   {0x0660, 0x0669},   {0x066E, 0x06D3},
    {0x06F0, 0x06F9},                                          // Arabic
    {0x0900, 0x097F},                                          // Devanagari
    {0x0E01, 0x0E3A},   {0x0E40, 0x0E5B},                      // Thai
    {0x3040, 0x30FF},                                          // Kana
    {0x3400, 0x4DBF},   {0x4E00, 0x9FFF},                      // CJK
    {0xAC00, 0xD7A3},                                          // Hangul
    {0xFF10, 0xFF19},   {0xFF21, 0xFF3A},   {0xFF41, 0xFF5A},  // fullwidth
};

bool is_alnum(char32_t cp) {
  if (cp == 0x0387) return false;  // Greek ano teleia inside the 0x0388 block guard
  for (const Range& r : kAlnumRanges) {
    if (cp >= r.lo && cp <= r.hi) return true;
  }
  return false;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;  // Latin-1
  if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20;  // Greek
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;                  // Cyrillic
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 0x20;                  // fullwidth
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = decode_utf8(text, i);
    if (is_alnum(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = decode_utf8(text, i);
    if (is_alnum(cp)) {
      if (!in_token) {
        ++count;
        in_token = true;
      }
    } else {
      in_token = false;
    }
  }
  return count;
}

std::size_t LengthHistogram::total() const {
  std::size_t sum = 0;
  for (std::size_t c : counts) sum += c;
  return sum;
}

namespace {

LengthHistogram stats_from_lengths(std::vector<std::size_t> lengths,
                                   std::span<const int64_t> bucket_edges) {
  if (lengths.empty()) fail("length_stats: empty record set");
  for (std::size_t i = 1; i < bucket_edges.size(); ++i) {
    if (bucket_edges[i] <= bucket_edges[i - 1]) {
      fail("length_stats: bucket edges must be strictly ascending");
    }
  }

  LengthHistogram hist;
  hist.bucket_edges.assign(bucket_edges.begin(), bucket_edges.end());
  hist.counts.assign(bucket_edges.size() + 1, 0);
  for (std::size_t len : lengths) {
    // Bucket index = number of edges <= len, giving [edge[i-1], edge[i]).
    std::size_t bucket = static_cast<std::size_t>(
        std::upper_bound(bucket_edges.begin(), bucket_edges.end(),
                         static_cast<int64_t>(len)) -
        bucket_edges.begin());
    hist.counts[bucket]++;
  }

  std::sort(lengths.begin(), lengths.end());
  hist.summary.min = lengths.front();
  hist.summary.max = lengths.back();
  KahanSum sum;
  for (std::size_t len : lengths) sum.add(static_cast<double>(len));
  hist.summary.mean = sum.value() / static_cast<double>(lengths.size());
  const std::size_t n = lengths.size();
  hist.summary.median =
      (n % 2 == 1) ? static_cast<double>(lengths[n / 2])
                   : (static_cast<double>(lengths[n / 2 - 1]) +
                      static_cast<double>(lengths[n / 2])) /
                         2.0;
  return hist;
}

}  // namespace

LengthHistogram length_stats(const DocumentSet& set, std::span<const int64_t> bucket_edges) {
  std::vector<std::size_t> lengths;
  lengths.reserve(set.size());
  for (const auto& doc : set.docs) lengths.push_back(token_count(doc.text));
  return stats_from_lengths(std::move(lengths), bucket_edges);
}

LengthHistogram length_stats(const QuerySet& set, std::span<const int64_t> bucket_edges) {
  std::vector<std::size_t> lengths;
  lengths.reserve(set.size());
  for (const auto& query : set.queries) lengths.push_back(token_count(query.text));
  return stats_from_lengths(std::move(lengths), bucket_edges);
}

}  // namespace negminer::corpus

#pragma once

// Write-once/read-many storage containers plus their sidecar offset indexes.
//
// Tape: a single well-formed XML document <tape> whose <record id datetime>
// children each embed one SurrogateDocument verbatim.
// Arc: binary concatenation; each record is one header line
// "<ds-uri> <media-type> <datetime> <length>\n" followed by exactly length
// payload bytes and a trailing "\n".
//
// The index lives next to the container as "<container>.idx" with lines
// "<id>\t<datetime>\t<offset>\t<length>\n" and is rebuildable from the
// container alone. Tape offsets delimit the full <record> element; arc
// offsets point at the payload start.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/sha256.hpp"
#include "fedgate/surrogate.hpp"
#include "fedgate/xml.hpp"

namespace fedgate {

struct ContainerRecord {
  std::string id;
  FedDatetime datetime;
  uint64_t offset = 0;
  uint64_t length = 0;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Err::NotFound, "cannot open " + p.string());
  std::string out;
  in.seekg(0, std::ios::end);
  out.resize(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  if (!in) fail(Err::IoError, "short read on " + p.string());
  return out;
}

inline std::string read_span(const std::filesystem::path& p, uint64_t offset, uint64_t length) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Err::NotFound, "cannot open " + p.string());
  in.seekg(static_cast<std::streamoff>(offset));
  std::string out(length, '\0');
  in.read(out.data(), static_cast<std::streamsize>(length));
  if (static_cast<uint64_t>(in.gcount()) != length)
    fail(Err::IoError, "short read at offset " + std::to_string(offset) + " in " + p.string());
  return out;
}

inline std::filesystem::path index_path(const std::filesystem::path& container) {
  return std::filesystem::path(container.string() + ".idx");
}

inline void write_index(const std::filesystem::path& container,
                        const std::vector<ContainerRecord>& records) {
  std::ofstream out(index_path(container), std::ios::binary | std::ios::trunc);
  for (const auto& r : records)
    out << r.id << '\t' << r.datetime.to_string() << '\t' << r.offset << '\t' << r.length << '\n';
  out.flush();
  if (!out) fail(Err::SealError, "failed writing index for " + container.string());
}

inline std::vector<ContainerRecord> load_index(const std::filesystem::path& container) {
  std::filesystem::path ip = index_path(container);
  std::string data = read_file(ip);
  std::vector<ContainerRecord> out;
  size_t pos = 0;
  int lineno = 0;
  while (pos < data.size()) {
    size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) fail(Err::IoError, ip.string() + ": unterminated last line");
    std::string_view line(data.data() + pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    ContainerRecord r;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    size_t t3 = t2 == std::string_view::npos ? t2 : line.find('\t', t2 + 1);
    if (t3 == std::string_view::npos)
      fail(Err::IoError, ip.string() + ": bad index line " + std::to_string(lineno));
    r.id = std::string(line.substr(0, t1));
    auto dt = FedDatetime::try_parse(line.substr(t1 + 1, t2 - t1 - 1));
    if (!dt) fail(Err::IoError, ip.string() + ": bad datetime on line " + std::to_string(lineno));
    r.datetime = *dt;
    auto parse_u64 = [&](std::string_view s, uint64_t& v) {
      v = 0;
      if (s.empty()) return false;
      for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<uint64_t>(c - '0');
      }
      return true;
    };
    if (!parse_u64(line.substr(t2 + 1, t3 - t2 - 1), r.offset) ||
        !parse_u64(line.substr(t3 + 1), r.length))
      fail(Err::IoError, ip.string() + ": bad offsets on line " + std::to_string(lineno));
    out.push_back(std::move(r));
  }
  return out;
}

// Window filter + (datetime, id) ordering shared by tape_list/arc_list.
inline std::vector<std::pair<std::string, FedDatetime>> list_window(
    const std::vector<ContainerRecord>& records, const std::optional<FedDatetime>& from,
    const std::optional<FedDatetime>& until) {
  if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
  std::vector<std::pair<std::string, FedDatetime>> out;
  for (const auto& r : records)
    if (datetime_in_window(r.datetime, from, until)) out.emplace_back(r.id, r.datetime);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  return out;
}

inline bool media_type_ok(std::string_view mt) {
  if (mt.empty()) return false;
  for (char c : mt)
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return false;
  return true;
}

}  // namespace detail

inline std::string container_digest(const std::filesystem::path& p) {
  return sha256_hex(detail::read_file(p));
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTapeProlog = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<tape>\n";
inline constexpr std::string_view kRecordClose = "</record>";

class TapeWriter {
 public:
  explicit TapeWriter(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_))
      fail(Err::IoError, "container already exists: " + path_.string());
    out_.open(path_, std::ios::binary);
    if (!out_) fail(Err::IoError, "cannot create " + path_.string());
  }

  // Appends one SurrogateDocument; the record id is the document's
  // surrogateURI. The document is parsed, so invalid bytes never enter a tape.
  ContentURI append(const SurrogateDocument& doc, FedDatetime datetime) {
    if (sealed_) fail(Err::ReadOnlyViolation, "tape is sealed: " + path_.string());
    Surrogate s = parse_surrogate(doc);
    if (by_id_.count(s.surrogate_uri.value))
      fail(Err::DuplicateRecord, "surrogateURI already in tape: " + s.surrogate_uri.value);
    if (records_.empty()) write_raw(kTapeProlog);
    std::string start = "<record id=\"" + xml::escape_attr(s.surrogate_uri.value) +
                        "\" datetime=\"" + datetime.to_string() + "\">\n";
    uint64_t offset = written_;
    uint64_t length = start.size() + doc.bytes.size() + kRecordClose.size();
    write_raw(start);
    write_raw(doc.bytes);
    write_raw(kRecordClose);
    write_raw("\n");
    by_id_.emplace(s.surrogate_uri.value, records_.size());
    records_.push_back(ContainerRecord{s.surrogate_uri.value, datetime, offset, length});
    return s.surrogate_uri;
  }

  // Writes the closing root tag, verifies the whole file parses as XML and
  // flushes the sidecar index. On failure the tape stays in Writing state.
  void seal() {
    if (sealed_) fail(Err::ReadOnlyViolation, "tape is already sealed: " + path_.string());
    if (records_.empty())
      write_raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<tape/>\n");
    else
      write_raw("</tape>\n");
    out_.flush();
    if (!out_) fail(Err::SealError, "flush failed for " + path_.string());
    out_.close();
    std::string all = detail::read_file(path_);
    try {
      xml::parse_document(all);
    } catch (const FedError& e) {
      fail(Err::SealError, "sealed tape is not well-formed: " + std::string(e.what()));
    }
    detail::write_index(path_, records_);
    sealed_ = true;
  }

  bool sealed() const { return sealed_; }
  size_t record_count() const { return records_.size(); }
  const std::filesystem::path& path() const { return path_; }
  const std::vector<ContainerRecord>& records() const { return records_; }

 private:
  void write_raw(std::string_view s) {
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out_) fail(Err::IoError, "write failed for " + path_.string());
    written_ += s.size();
  }

  std::filesystem::path path_;
  std::ofstream out_;
  uint64_t written_ = 0;
  bool sealed_ = false;
  std::vector<ContainerRecord> records_;
  std::unordered_map<std::string, size_t> by_id_;
};

// Read side of a sealed tape. Holds no open file descriptor; every get is an
// independent positioned read, so any number of readers can share one tape.
class TapeReader {
 public:
  explicit TapeReader(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) fail(Err::NotFound, "no such tape: " + path_.string());
    records_ = detail::load_index(path_);
    for (size_t i = 0; i < records_.size(); ++i) {
      if (!by_id_.emplace(records_[i].id, i).second)
        fail(Err::IoError, "duplicate id in index: " + records_[i].id);
    }
  }

  SurrogateDocument get(const ContentURI& record_id) const { return get(record_id.value); }

  SurrogateDocument get(std::string_view record_id) const {
    auto it = by_id_.find(std::string(record_id));
    if (it == by_id_.end())
      fail(Err::NotFound, "no such record: " + std::string(record_id) + " in " + path_.string());
    return extract(records_[it->second]);
  }

  std::vector<std::pair<std::string, FedDatetime>> list(
      const std::optional<FedDatetime>& from = std::nullopt,
      const std::optional<FedDatetime>& until = std::nullopt) const {
    return detail::list_window(records_, from, until);
  }

  size_t record_count() const { return records_.size(); }
  const std::vector<ContainerRecord>& records() const { return records_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  SurrogateDocument extract(const ContainerRecord& r) const {
    std::string bytes = detail::read_span(path_, r.offset, r.length);
    size_t nl = bytes.find('\n');
    if (bytes.rfind("<record", 0) != 0 || nl == std::string::npos ||
        bytes.size() < nl + 1 + kRecordClose.size() ||
        bytes.compare(bytes.size() - kRecordClose.size(), kRecordClose.size(), kRecordClose) != 0)
      fail(Err::IoError, "corrupt record for " + r.id + " in " + path_.string());
    return SurrogateDocument{
        bytes.substr(nl + 1, bytes.size() - nl - 1 - kRecordClose.size())};
  }

  std::filesystem::path path_;
  std::vector<ContainerRecord> records_;
  std::unordered_map<std::string, size_t> by_id_;
};

// ---------------------------------------------------------------------------
// Arc
// ---------------------------------------------------------------------------

class ArcWriter {
 public:
  explicit ArcWriter(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_))
      fail(Err::IoError, "container already exists: " + path_.string());
    out_.open(path_, std::ios::binary);
    if (!out_) fail(Err::IoError, "cannot create " + path_.string());
  }

  ContainerRecord append(const ContentURI& ds_uri, const std::string& media_type,
                         FedDatetime datetime, std::string_view payload) {
    if (sealed_) fail(Err::ReadOnlyViolation, "arc is sealed: " + path_.string());
    if (!is_valid_absolute_uri(ds_uri.value))
      fail(Err::BadArgument, "ds-uri is not an absolute URI: \"" + ds_uri.value + "\"");
    if (!detail::media_type_ok(media_type))
      fail(Err::BadArgument, "media type must be non-empty and space-free: \"" + media_type + "\"");
    if (by_id_.count(ds_uri.value))
      fail(Err::DuplicateRecord, "ds-uri already in arc: " + ds_uri.value);
    std::string header = ds_uri.value + " " + media_type + " " + datetime.to_string() + " " +
                         std::to_string(payload.size()) + "\n";
    write_raw(header);
    uint64_t offset = written_;
    write_raw(payload);
    write_raw("\n");
    ContainerRecord rec{ds_uri.value, datetime, offset, payload.size()};
    by_id_.emplace(ds_uri.value, records_.size());
    records_.push_back(rec);
    return rec;
  }

  void seal() {
    if (sealed_) fail(Err::ReadOnlyViolation, "arc is already sealed: " + path_.string());
    out_.flush();
    if (!out_) fail(Err::SealError, "flush failed for " + path_.string());
    out_.close();
    detail::write_index(path_, records_);
    sealed_ = true;
  }

  bool sealed() const { return sealed_; }
  size_t record_count() const { return records_.size(); }
  const std::filesystem::path& path() const { return path_; }
  const std::vector<ContainerRecord>& records() const { return records_; }

 private:
  void write_raw(std::string_view s) {
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out_) fail(Err::IoError, "write failed for " + path_.string());
    written_ += s.size();
  }

  std::filesystem::path path_;
  std::ofstream out_;
  uint64_t written_ = 0;
  bool sealed_ = false;
  std::vector<ContainerRecord> records_;
  std::unordered_map<std::string, size_t> by_id_;
};

class ArcReader {
 public:
  explicit ArcReader(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) fail(Err::NotFound, "no such arc: " + path_.string());
    records_ = detail::load_index(path_);
    for (size_t i = 0; i < records_.size(); ++i) {
      if (!by_id_.emplace(records_[i].id, i).second)
        fail(Err::IoError, "duplicate id in index: " + records_[i].id);
    }
    // Header spans follow from index adjacency: records are contiguous, so a
    // header starts where the previous record's payload (plus separator) ends.
    std::vector<size_t> order(records_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return records_[a].offset < records_[b].offset; });
    header_start_.resize(records_.size());
    uint64_t prev_end = 0;
    for (size_t i : order) {
      header_start_[i] = prev_end;
      prev_end = records_[i].offset + records_[i].length + 1;
    }
  }

  // Returns (media_type, payload); payload bytes are exactly what was appended.
  std::pair<std::string, std::string> get(const ContentURI& ds_uri) const {
    return get(ds_uri.value);
  }

  std::pair<std::string, std::string> get(std::string_view ds_uri) const {
    auto it = by_id_.find(std::string(ds_uri));
    if (it == by_id_.end())
      fail(Err::NotFound, "no such record: " + std::string(ds_uri) + " in " + path_.string());
    const ContainerRecord& r = records_[it->second];
    if (r.offset <= header_start_[it->second])
      fail(Err::IoError, "corrupt index for " + r.id + " in " + path_.string());
    std::string header =
        detail::read_span(path_, header_start_[it->second], r.offset - header_start_[it->second]);
    auto parsed = parse_header(header);
    if (!parsed || parsed->uri != r.id || parsed->length != r.length)
      fail(Err::IoError, "corrupt record header for " + r.id + " in " + path_.string());
    return {parsed->media_type, detail::read_span(path_, r.offset, r.length)};
  }

  std::vector<std::pair<std::string, FedDatetime>> list(
      const std::optional<FedDatetime>& from = std::nullopt,
      const std::optional<FedDatetime>& until = std::nullopt) const {
    return detail::list_window(records_, from, until);
  }

  size_t record_count() const { return records_.size(); }
  const std::vector<ContainerRecord>& records() const { return records_; }
  const std::filesystem::path& path() const { return path_; }

  struct Header {
    std::string uri;
    std::string media_type;
    FedDatetime datetime;
    uint64_t length = 0;
  };

  // Parses one "<uri> <media> <datetime> <length>\n" header line.
  static std::optional<Header> parse_header(std::string_view line) {
    if (line.empty() || line.back() != '\n') return std::nullopt;
    line.remove_suffix(1);
    size_t s1 = line.find(' ');
    size_t s2 = s1 == std::string_view::npos ? s1 : line.find(' ', s1 + 1);
    size_t s3 = s2 == std::string_view::npos ? s2 : line.find(' ', s2 + 1);
    if (s3 == std::string_view::npos) return std::nullopt;
    Header h;
    h.uri = std::string(line.substr(0, s1));
    h.media_type = std::string(line.substr(s1 + 1, s2 - s1 - 1));
    auto dt = FedDatetime::try_parse(line.substr(s2 + 1, s3 - s2 - 1));
    if (!dt || !is_valid_absolute_uri(h.uri) || !detail::media_type_ok(h.media_type))
      return std::nullopt;
    h.datetime = *dt;
    std::string_view len = line.substr(s3 + 1);
    if (len.empty()) return std::nullopt;
    for (char c : len) {
      if (c < '0' || c > '9') return std::nullopt;
      h.length = h.length * 10 + static_cast<uint64_t>(c - '0');
    }
    return h;
  }

 private:
  std::filesystem::path path_;
  std::vector<ContainerRecord> records_;
  std::vector<uint64_t> header_start_;
  std::unordered_map<std::string, size_t> by_id_;
};

// ---------------------------------------------------------------------------
// fsck
// ---------------------------------------------------------------------------

struct FsckReport {
  std::string container_kind;  // "tape" or "arc"
  size_t records_checked = 0;
  std::vector<std::string> issues;
  bool healthy() const { return issues.empty(); }
};

namespace detail {

inline void fsck_tape(const std::string& data, const std::vector<ContainerRecord>& index,
                      FsckReport& report) {
  xml::Element root;
  try {
    root = xml::parse_document(data);
  } catch (const FedError& e) {
    report.issues.push_back(std::string("tape is not well-formed XML: ") + e.what());
    return;
  }
  if (root.name != "tape") report.issues.push_back("root element is <" + root.name + ">, not <tape>");

  std::map<std::string, std::pair<std::string, size_t>> parsed;  // id -> (datetime, count)
  for (const auto& c : root.children) {
    if (c.name != "record") {
      report.issues.push_back("unexpected element <" + c.name + "> in tape");
      continue;
    }
    const std::string* id = c.attr("id");
    const std::string* dt = c.attr("datetime");
    if (!id || !dt) {
      report.issues.push_back("record missing id or datetime attribute");
      continue;
    }
    auto [it, fresh] = parsed.emplace(*id, std::make_pair(*dt, size_t{1}));
    if (!fresh) {
      it->second.second += 1;
      report.issues.push_back("duplicate record id in tape: " + *id);
    }
  }
  if (parsed.size() != index.size() || root.children.size() != index.size())
    report.issues.push_back("record count mismatch: tape has " +
                            std::to_string(root.children.size()) + ", index has " +
                            std::to_string(index.size()));

  for (const auto& r : index) {
    ++report.records_checked;
    auto it = parsed.find(r.id);
    if (it == parsed.end()) {
      report.issues.push_back("index id not present in tape: " + r.id);
      continue;
    }
    if (it->second.first != r.datetime.to_string())
      report.issues.push_back("datetime mismatch for " + r.id + ": tape says " + it->second.first +
                              ", index says " + r.datetime.to_string());
    if (r.offset + r.length > data.size()) {
      report.issues.push_back("index entry for " + r.id + " points past end of file");
      continue;
    }
    std::string_view bytes(data.data() + r.offset, r.length);
    size_t nl = bytes.find('\n');
    if (bytes.rfind("<record", 0) != 0 || nl == std::string_view::npos ||
        bytes.size() < nl + 1 + kRecordClose.size() ||
        bytes.substr(bytes.size() - kRecordClose.size()) != kRecordClose) {
      report.issues.push_back("index entry for " + r.id +
                              " does not delimit a <record> element (offset " +
                              std::to_string(r.offset) + ")");
      continue;
    }
    std::string_view doc = bytes.substr(nl + 1, bytes.size() - nl - 1 - kRecordClose.size());
    auto violations = validate_surrogate(doc);
    if (!violations.empty()) {
      report.issues.push_back("embedded document for " + r.id + " is invalid: " +
                              violations.front().path + ": " + violations.front().message);
      continue;
    }
    Surrogate s = parse_surrogate(doc);
    if (s.surrogate_uri.value != r.id)
      report.issues.push_back("record id " + r.id + " does not match embedded surrogateURI " +
                              s.surrogate_uri.value);
  }
}

inline void fsck_arc(const std::string& data, const std::vector<ContainerRecord>& index,
                     FsckReport& report) {
  // Sequential structural walk.
  std::vector<ContainerRecord> walked;
  size_t pos = 0;
  while (pos < data.size()) {
    size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) {
      report.issues.push_back("truncated header line at offset " + std::to_string(pos));
      break;
    }
    auto header = ArcReader::parse_header(std::string_view(data).substr(pos, eol - pos + 1));
    if (!header) {
      report.issues.push_back("corrupt header line at offset " + std::to_string(pos));
      break;
    }
    uint64_t payload_off = eol + 1;
    if (payload_off + header->length + 1 > data.size()) {
      report.issues.push_back("truncated payload for " + header->uri + " at offset " +
                              std::to_string(payload_off) + " (want " +
                              std::to_string(header->length) + " bytes + separator)");
      break;
    }
    if (data[payload_off + header->length] != '\n') {
      report.issues.push_back("missing record separator after payload of " + header->uri);
      break;
    }
    walked.push_back(ContainerRecord{header->uri, header->datetime, payload_off, header->length});
    ++report.records_checked;
    pos = payload_off + header->length + 1;
  }
  if (walked.size() != index.size())
    report.issues.push_back("record count mismatch: arc walk found " +
                            std::to_string(walked.size()) + ", index has " +
                            std::to_string(index.size()));
  size_t n = std::min(walked.size(), index.size());
  for (size_t i = 0; i < n; ++i) {
    const auto& w = walked[i];
    const auto& x = index[i];
    if (w.id != x.id || w.offset != x.offset || w.length != x.length ||
        w.datetime != x.datetime)
      report.issues.push_back("index entry " + std::to_string(i) + " disagrees with arc: index(" +
                              x.id + "," + std::to_string(x.offset) + "," +
                              std::to_string(x.length) + ") vs arc(" + w.id + "," +
                              std::to_string(w.offset) + "," + std::to_string(w.length) + ")");
  }
}

}  // namespace detail

// Rebuilds the sidecar index purely from container content (tape record
// spans come from a full parse; arc offsets from a sequential header walk).
inline std::vector<ContainerRecord> derive_index(const std::filesystem::path& path) {
  std::string data = detail::read_file(path);
  std::vector<ContainerRecord> out;
  if (data.rfind("<?xml", 0) == 0 || data.rfind("<tape", 0) == 0) {
    xml::Element root = xml::parse_document(data);
    if (root.name != "tape") fail(Err::ParseError, "root element is not <tape>");
    for (const auto& c : root.children) {
      if (c.name != "record") fail(Err::ParseError, "unexpected element <" + c.name + ">");
      const std::string* id = c.attr("id");
      const std::string* dt = c.attr("datetime");
      if (!id || !dt) fail(Err::ParseError, "record missing id or datetime");
      auto parsed = FedDatetime::try_parse(*dt);
      if (!parsed) fail(Err::ParseError, "bad record datetime");
      out.push_back(ContainerRecord{*id, *parsed, c.span_begin, c.span_end - c.span_begin});
    }
    return out;
  }
  size_t pos = 0;
  while (pos < data.size()) {
    size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) fail(Err::ParseError, "truncated arc header");
    auto header = ArcReader::parse_header(std::string_view(data).substr(pos, eol - pos + 1));
    if (!header) fail(Err::ParseError, "corrupt arc header at offset " + std::to_string(pos));
    uint64_t payload_off = eol + 1;
    if (payload_off + header->length + 1 > data.size())
      fail(Err::ParseError, "truncated arc payload for " + header->uri);
    out.push_back(ContainerRecord{header->uri, header->datetime, payload_off, header->length});
    pos = payload_off + header->length + 1;
  }
  return out;
}

inline void rebuild_index(const std::filesystem::path& path) {
  detail::write_index(path, derive_index(path));
}

// Cross-checks a sealed container against its index: every index entry must
// exactly delimit a record, and every record must appear in the index.
inline FsckReport container_fsck(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(Err::NotFound, "no such container: " + path.string());
  if (!std::filesystem::exists(detail::index_path(path)))
    fail(Err::NotFound, "missing index: " + detail::index_path(path).string());
  std::string data = detail::read_file(path);
  FsckReport report;
  bool is_tape = data.rfind("<?xml", 0) == 0 || data.rfind("<tape", 0) == 0;
  report.container_kind = is_tape ? "tape" : "arc";
  std::vector<ContainerRecord> index;
  try {
    index = detail::load_index(path);
  } catch (const FedError& e) {
    report.issues.push_back(e.what());
    return report;
  }
  if (is_tape)
    detail::fsck_tape(data, index, report);
  else
    detail::fsck_arc(data, index, report);
  return report;
}

}  // namespace fedgate

#pragma once

// Identifier, timestamp and policy vocabulary shared by every federation
// component. All types here are immutable values.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <ctime>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fedgate/errors.hpp"

namespace fedgate {

// ---------------------------------------------------------------------------
// ContentURI
// ---------------------------------------------------------------------------

// Protocol-based URIs can be de-referenced via a common transfer protocol;
// everything else is an opaque identifier that only the federation's own
// interfaces can resolve.
enum class UriKind { ProtocolBased, NonProtocolBased };

namespace detail {

inline bool scheme_start_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool scheme_char(char c) {
  return scheme_start_char(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// Returns the scheme of an absolute URI, or empty if `raw` is not one.
// An absolute URI here is scheme ":" non-empty-rest with no whitespace or
// control bytes anywhere.
inline std::string_view uri_scheme(std::string_view raw) {
  if (raw.empty() || !scheme_start_char(raw[0])) return {};
  size_t colon = std::string_view::npos;
  for (size_t i = 1; i < raw.size(); ++i) {
    if (raw[i] == ':') {
      colon = i;
      break;
    }
    if (!scheme_char(raw[i])) return {};
  }
  if (colon == std::string_view::npos || colon + 1 >= raw.size()) return {};
  for (char c : raw)
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return {};
  return raw.substr(0, colon);
}

}  // namespace detail

struct ContentURI {
  std::string value;
  UriKind kind = UriKind::NonProtocolBased;

  // Identity is exact byte equality of the value; no normalization.
  friend bool operator==(const ContentURI& a, const ContentURI& b) { return a.value == b.value; }
  friend auto operator<=>(const ContentURI& a, const ContentURI& b) { return a.value <=> b.value; }
};

// The closed set of schemes de-referenced via a common protocol.
inline bool is_protocol_scheme(std::string_view scheme) {
  std::string s = detail::ascii_lower(scheme);
  return s == "http" || s == "https" || s == "ftp";
}

inline bool is_valid_absolute_uri(std::string_view raw) {
  return !detail::uri_scheme(raw).empty();
}

// Assigns the URI kind from its scheme. DO-URIs are later *used* as
// non-protocol-based regardless of what this returns; that rule is enforced
// at call sites.
inline ContentURI classify_uri(std::string_view raw) {
  std::string_view scheme = detail::uri_scheme(raw);
  if (scheme.empty()) fail(Err::InvalidURI, "not an absolute URI: \"" + std::string(raw) + "\"");
  return ContentURI{std::string(raw),
                    is_protocol_scheme(scheme) ? UriKind::ProtocolBased : UriKind::NonProtocolBased};
}

inline std::optional<ContentURI> try_classify_uri(std::string_view raw) {
  std::string_view scheme = detail::uri_scheme(raw);
  if (scheme.empty()) return std::nullopt;
  return ContentURI{std::string(raw),
                    is_protocol_scheme(scheme) ? UriKind::ProtocolBased : UriKind::NonProtocolBased};
}

// ---------------------------------------------------------------------------
// FedDatetime
// ---------------------------------------------------------------------------

namespace detail {

// Howard Hinnant's civil-date algorithms; proleptic Gregorian calendar.
inline int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

inline bool is_leap(int64_t y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

inline unsigned days_in_month(int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> k = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return k[m - 1];
}

inline bool parse_fixed_uint(std::string_view s, unsigned& out) {
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + static_cast<unsigned>(c - '0');
  }
  return !s.empty();
}

}  // namespace detail

// UTC instant at second granularity. Serializes as YYYY-MM-DDThh:mm:ssZ;
// the total order of values matches the lexicographic order of that form.
class FedDatetime {
 public:
  FedDatetime() = default;

  static FedDatetime from_seconds(int64_t secs_since_epoch) { return FedDatetime(secs_since_epoch); }

  static FedDatetime from_civil(int64_t y, unsigned mo, unsigned d, unsigned h, unsigned mi,
                                unsigned s) {
    return FedDatetime(detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s);
  }

  // Strict wire form YYYY-MM-DDThh:mm:ssZ.
  static FedDatetime parse(std::string_view s) {
    auto dt = try_parse(s);
    if (!dt) fail(Err::BadArgument, "bad datetime: \"" + std::string(s) + "\"");
    return *dt;
  }

  static std::optional<FedDatetime> try_parse(std::string_view s) {
    if (s.size() != 20 || s[10] != 'T' || s[19] != 'Z') return std::nullopt;
    return parse_parts(s.substr(0, 10), s.substr(11, 8));
  }

  // Accepts a date-only value YYYY-MM-DD as an inclusive lower bound
  // (expands to 00:00:00Z) in addition to the full form.
  static std::optional<FedDatetime> try_parse_lower(std::string_view s) {
    if (s.size() == 10) return parse_parts(s, "00:00:00");
    return try_parse(s);
  }

  // Date-only expands to 23:59:59Z when used as an inclusive upper bound.
  static std::optional<FedDatetime> try_parse_upper(std::string_view s) {
    if (s.size() == 10) return parse_parts(s, "23:59:59");
    return try_parse(s);
  }

  static FedDatetime now() { return FedDatetime(static_cast<int64_t>(::time(nullptr))); }

  std::string to_string() const {
    int64_t days = seconds_ >= 0 ? seconds_ / 86400 : (seconds_ - 86399) / 86400;
    int64_t rem = seconds_ - days * 86400;
    int64_t y;
    unsigned mo, d;
    detail::civil_from_days(days, y, mo, d);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), mo, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60));
    return buf;
  }

  int64_t seconds() const { return seconds_; }
  FedDatetime plus_seconds(int64_t n) const { return FedDatetime(seconds_ + n); }

  friend bool operator==(const FedDatetime&, const FedDatetime&) = default;
  friend auto operator<=>(const FedDatetime&, const FedDatetime&) = default;

 private:
  explicit FedDatetime(int64_t secs) : seconds_(secs) {}

  static std::optional<FedDatetime> parse_parts(std::string_view date, std::string_view time) {
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') return std::nullopt;
    if (time.size() != 8 || time[2] != ':' || time[5] != ':') return std::nullopt;
    unsigned y, mo, d, h, mi, s;
    if (!detail::parse_fixed_uint(date.substr(0, 4), y) ||
        !detail::parse_fixed_uint(date.substr(5, 2), mo) ||
        !detail::parse_fixed_uint(date.substr(8, 2), d) ||
        !detail::parse_fixed_uint(time.substr(0, 2), h) ||
        !detail::parse_fixed_uint(time.substr(3, 2), mi) ||
        !detail::parse_fixed_uint(time.substr(6, 2), s))
      return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > detail::days_in_month(y, mo)) return std::nullopt;
    if (h > 23 || mi > 59 || s > 59) return std::nullopt;
    return from_civil(y, mo, d, h, mi, s);
  }

  int64_t seconds_ = 0;
};

// True iff dt lies in the inclusive window [from, until]; absent bounds are
// open ends.
inline bool datetime_in_window(FedDatetime dt, const std::optional<FedDatetime>& from,
                               const std::optional<FedDatetime>& until) {
  if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
  if (from && dt < *from) return false;
  if (until && dt > *until) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Content Object model
// ---------------------------------------------------------------------------

struct Property {
  std::string key_uri;
  std::string value;
  friend bool operator==(const Property&, const Property&) = default;
};

// Ordered, duplicate-free, non-empty set of DO-URIs. All members are treated
// as non-protocol-based in federation use regardless of their scheme.
struct DigitalObjectRef {
  std::vector<ContentURI> do_uris;
  friend bool operator==(const DigitalObjectRef&, const DigitalObjectRef&) = default;
};

struct DatastreamRef {
  std::optional<ContentURI> ds_uri;   // non-protocol-based when present
  std::optional<ContentURI> ds_url;   // protocol-based when present
  std::optional<FedDatetime> ds_datetime;
  std::string media_type;
  std::vector<Property> properties;
  friend bool operator==(const DatastreamRef&, const DatastreamRef&) = default;
};

struct Surrogate {
  ContentURI surrogate_uri;
  std::optional<ContentURI> surrogate_url;
  DigitalObjectRef object;
  std::vector<DatastreamRef> datastreams;
  FedDatetime surrogate_datetime;
  std::vector<Property> properties;

  // Descriptive-only objects carry no datastreams; allowed but flagged so
  // ingest consumers can tell them apart.
  bool descriptive_only() const { return datastreams.empty(); }

  friend bool operator==(const Surrogate&, const Surrogate&) = default;
};

enum class SurrogatePolicy { NewSurrogate, UpdateSurrogate };
enum class DatastreamPolicy { NewDatastream, UpdateDatastream };

// Fixed per repository at creation; immutable thereafter.
struct UpdatePolicy {
  SurrogatePolicy surrogate_policy = SurrogatePolicy::NewSurrogate;
  DatastreamPolicy datastream_policy = DatastreamPolicy::NewDatastream;
  friend bool operator==(const UpdatePolicy&, const UpdatePolicy&) = default;
};

enum class RepoKind { SurrogateRepository, DatastreamRepository };

struct RepositoryIdentity {
  ContentURI repository_uri;  // non-protocol-based
  RepoKind repo_kind = RepoKind::SurrogateRepository;
  friend bool operator==(const RepositoryIdentity&, const RepositoryIdentity&) = default;
};

enum class InterfaceType {
  HarvestSurrogates,
  ObtainSurrogate,
  LocateSurrogates,
  ObtainDatastream,
  HarvestDatastreamIdentifiers,
  HarvestIdentifiers,
  LocateRepositories,
  ObtainRegistryRecord,
};

inline const char* interface_type_name(InterfaceType t) {
  switch (t) {
    case InterfaceType::HarvestSurrogates: return "HarvestSurrogates";
    case InterfaceType::ObtainSurrogate: return "ObtainSurrogate";
    case InterfaceType::LocateSurrogates: return "LocateSurrogates";
    case InterfaceType::ObtainDatastream: return "ObtainDatastream";
    case InterfaceType::HarvestDatastreamIdentifiers: return "HarvestDatastreamIdentifiers";
    case InterfaceType::HarvestIdentifiers: return "HarvestIdentifiers";
    case InterfaceType::LocateRepositories: return "LocateRepositories";
    case InterfaceType::ObtainRegistryRecord: return "ObtainRegistryRecord";
  }
  return "Unknown";
}

inline std::optional<InterfaceType> interface_type_from_name(std::string_view s) {
  static constexpr std::array<InterfaceType, 8> all = {
      InterfaceType::HarvestSurrogates,    InterfaceType::ObtainSurrogate,
      InterfaceType::LocateSurrogates,     InterfaceType::ObtainDatastream,
      InterfaceType::HarvestDatastreamIdentifiers, InterfaceType::HarvestIdentifiers,
      InterfaceType::LocateRepositories,   InterfaceType::ObtainRegistryRecord};
  for (InterfaceType t : all)
    if (s == interface_type_name(t)) return t;
  return std::nullopt;
}

// An Interface-URI corresponds with exactly one network location at any time.
struct InterfaceBinding {
  ContentURI interface_uri;  // non-protocol-based
  InterfaceType interface_type = InterfaceType::HarvestSurrogates;
  ContentURI interface_url;  // protocol-based
  friend bool operator==(const InterfaceBinding&, const InterfaceBinding&) = default;
};

// ---------------------------------------------------------------------------
// URI minting
// ---------------------------------------------------------------------------

enum class EntityKind { DO, Datastream, Surrogate, Repository, Interface };

inline const char* entity_kind_tag(EntityKind k) {
  switch (k) {
    case EntityKind::DO: return "do";
    case EntityKind::Datastream: return "ds";
    case EntityKind::Surrogate: return "su";
    case EntityKind::Repository: return "repo";
    case EntityKind::Interface: return "if";
  }
  return "??";
}

inline std::string uuid_v4(std::mt19937_64& rng) {
  uint64_t hi = rng();
  uint64_t lo = rng();
  hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;  // version 4
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // RFC variant
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi >> 32),
                static_cast<unsigned long long>((hi >> 16) & 0xffff),
                static_cast<unsigned long long>(hi & 0xffff),
                static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

// Namespace must have the form info:<token>, token free of '/', whitespace
// and control bytes, e.g. "info:some-repo".
inline bool is_valid_info_namespace(std::string_view ns) {
  constexpr std::string_view prefix = "info:";
  if (ns.size() <= prefix.size() || ns.substr(0, prefix.size()) != prefix) return false;
  std::string_view token = ns.substr(prefix.size());
  for (char c : token) {
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f || c == '/') return false;
  }
  return true;
}

// Mints "<namespace>/<kind-tag>/<uuid-v4>" using the supplied random source.
inline ContentURI mint_uri(std::string_view ns, EntityKind kind, std::mt19937_64& rng) {
  if (!is_valid_info_namespace(ns))
    fail(Err::InvalidNamespace, "not an info:<token> namespace: \"" + std::string(ns) + "\"");
  std::string value = std::string(ns) + "/" + entity_kind_tag(kind) + "/" + uuid_v4(rng);
  return ContentURI{std::move(value), UriKind::NonProtocolBased};
}

}  // namespace fedgate

#pragma once

// Shared grammar for the two wire formats every tier speaks: the OAI-PMH
// subset (Identify, ListRecords, ListIdentifiers, GetRecord plus resumption
// tokens) and OpenURL KEV requests (url_ver / rft_id / svc_id). Pure string
// functions; transport lives in client.hpp and the service headers.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/sha256.hpp"
#include "fedgate/xml.hpp"

namespace fedgate::wire {

// --- query-string codec -----------------------------------------------------

inline std::string form_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '+') {
      out.push_back(' ');
    } else if (c == '%' && i + 2 < s.size()) {
      auto hex = [](char h) -> int {
        if (h >= '0' && h <= '9') return h - '0';
        if (h >= 'a' && h <= 'f') return h - 'a' + 10;
        if (h >= 'A' && h <= 'F') return h - 'A' + 10;
        return -1;
      };
      int hi = hex(s[i + 1]), lo = hex(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
      } else {
        out.push_back(c);
      }
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// Escapes only what would break the pair grammar; URI characters like ':'
// and '/' pass through verbatim so the composed strings match the ones
// clients write by hand.
inline std::string form_encode(std::string_view s) {
  static const char* hexdig = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (c == ' ' || c == '%' || c == '&' || c == '=' || c == '+' || c == '#' || u < 0x20 ||
        u == 0x7f) {
      out.push_back('%');
      out.push_back(hexdig[u >> 4]);
      out.push_back(hexdig[u & 0xf]);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

using QueryPairs = std::vector<std::pair<std::string, std::string>>;

inline QueryPairs parse_query(std::string_view qs) {
  QueryPairs out;
  size_t pos = 0;
  while (pos <= qs.size()) {
    size_t amp = qs.find('&', pos);
    std::string_view part =
        amp == std::string_view::npos ? qs.substr(pos) : qs.substr(pos, amp - pos);
    if (!part.empty()) {
      size_t eq = part.find('=');
      if (eq == std::string_view::npos)
        out.emplace_back(form_decode(part), "");
      else
        out.emplace_back(form_decode(part.substr(0, eq)), form_decode(part.substr(eq + 1)));
    }
    if (amp == std::string_view::npos) break;
    pos = amp + 1;
  }
  return out;
}

inline std::string compose_query(const QueryPairs& pairs) {
  std::string out;
  for (const auto& [k, v] : pairs) {
    if (!out.empty()) out.push_back('&');
    out += form_encode(k);
    out.push_back('=');
    out += form_encode(v);
  }
  return out;
}

// --- OAI-PMH subset ----------------------------------------------------------

enum class PmhVerb { Identify, ListRecords, ListIdentifiers, GetRecord };

inline const char* pmh_verb_name(PmhVerb v) {
  switch (v) {
    case PmhVerb::Identify: return "Identify";
    case PmhVerb::ListRecords: return "ListRecords";
    case PmhVerb::ListIdentifiers: return "ListIdentifiers";
    case PmhVerb::GetRecord: return "GetRecord";
  }
  return "?";
}

struct PmhRequest {
  PmhVerb verb = PmhVerb::Identify;
  std::optional<std::string> metadata_prefix;
  std::optional<std::string> identifier;
  // Bounds keep their request spelling so compose(parse(q)) == q; date-only
  // values expand per the from/until rule when evaluated.
  std::optional<std::string> from_raw;
  std::optional<std::string> until_raw;
  std::optional<std::string> resumption_token;

  std::optional<FedDatetime> from_bound() const {
    if (!from_raw) return std::nullopt;
    return FedDatetime::try_parse_lower(*from_raw);
  }
  std::optional<FedDatetime> until_bound() const {
    if (!until_raw) return std::nullopt;
    return FedDatetime::try_parse_upper(*until_raw);
  }

  friend bool operator==(const PmhRequest&, const PmhRequest&) = default;
};

// Parses an OAI-PMH query string, enforcing exactly the parameter
// combinations each verb allows. badVerb and badArgument come back as
// FedError codes for the endpoint layer to render.
inline PmhRequest parse_pmh(std::string_view query) {
  PmhRequest req;
  std::optional<std::string> verb;
  for (const auto& [k, v] : parse_query(query)) {
    auto set = [&](std::optional<std::string>& slot) {
      if (slot) fail(Err::BadArgument, "repeated parameter \"" + k + "\"");
      slot = v;
    };
    if (k == "verb") set(verb);
    else if (k == "metadataPrefix") set(req.metadata_prefix);
    else if (k == "identifier") set(req.identifier);
    else if (k == "from") set(req.from_raw);
    else if (k == "until") set(req.until_raw);
    else if (k == "resumptionToken") set(req.resumption_token);
    else fail(Err::BadArgument, "unknown parameter \"" + k + "\"");
  }
  if (!verb) fail(Err::BadVerb, "missing verb");
  if (*verb == "Identify") req.verb = PmhVerb::Identify;
  else if (*verb == "ListRecords") req.verb = PmhVerb::ListRecords;
  else if (*verb == "ListIdentifiers") req.verb = PmhVerb::ListIdentifiers;
  else if (*verb == "GetRecord") req.verb = PmhVerb::GetRecord;
  else fail(Err::BadVerb, "unknown verb \"" + *verb + "\"");

  auto forbid = [&](const std::optional<std::string>& slot, const char* name) {
    if (slot) fail(Err::BadArgument, std::string("parameter \"") + name + "\" is not allowed here");
  };
  switch (req.verb) {
    case PmhVerb::Identify:
      forbid(req.metadata_prefix, "metadataPrefix");
      forbid(req.identifier, "identifier");
      forbid(req.from_raw, "from");
      forbid(req.until_raw, "until");
      forbid(req.resumption_token, "resumptionToken");
      break;
    case PmhVerb::ListRecords:
    case PmhVerb::ListIdentifiers:
      forbid(req.identifier, "identifier");
      if (req.resumption_token) {
        forbid(req.metadata_prefix, "metadataPrefix");
        forbid(req.from_raw, "from");
        forbid(req.until_raw, "until");
      } else if (!req.metadata_prefix) {
        fail(Err::BadArgument, "metadataPrefix is required");
      }
      break;
    case PmhVerb::GetRecord:
      forbid(req.from_raw, "from");
      forbid(req.until_raw, "until");
      forbid(req.resumption_token, "resumptionToken");
      if (!req.identifier || !req.metadata_prefix)
        fail(Err::BadArgument, "GetRecord requires identifier and metadataPrefix");
      if (!is_valid_absolute_uri(*req.identifier))
        fail(Err::BadArgument, "identifier is not an absolute URI");
      break;
  }
  auto from = req.from_raw ? req.from_bound() : std::nullopt;
  if (req.from_raw && !from) fail(Err::BadArgument, "undecodable from: \"" + *req.from_raw + "\"");
  auto until = req.until_raw ? req.until_bound() : std::nullopt;
  if (req.until_raw && !until)
    fail(Err::BadArgument, "undecodable until: \"" + *req.until_raw + "\"");
  if (from && until && *from > *until) fail(Err::BadArgument, "from > until");
  return req;
}

inline std::string compose_pmh(const PmhRequest& req) {
  QueryPairs pairs;
  pairs.emplace_back("verb", pmh_verb_name(req.verb));
  if (req.metadata_prefix) pairs.emplace_back("metadataPrefix", *req.metadata_prefix);
  if (req.identifier) pairs.emplace_back("identifier", *req.identifier);
  if (req.from_raw) pairs.emplace_back("from", *req.from_raw);
  if (req.until_raw) pairs.emplace_back("until", *req.until_raw);
  if (req.resumption_token) pairs.emplace_back("resumptionToken", *req.resumption_token);
  return compose_query(pairs);
}

// --- OpenURL KEV --------------------------------------------------------------

inline constexpr std::string_view kOpenUrlVersion = "z39.88-2004";

// Federation-wide ServiceType identifiers.
inline constexpr std::string_view kSvcObtainSurrogate = "info:ourfederation/svc/ObtainSurrogate.SUR";
inline constexpr std::string_view kSvcLocateSurrogates = "info:ourfederation/svc/LocateSurrogates";
inline constexpr std::string_view kSvcObtainDatastream = "info:ourfederation/svc/ObtainDatastream";
inline constexpr std::string_view kSvcLocateRepositories = "info:ourfederation/svc/LocateRepositories";
inline constexpr std::string_view kSvcObtainRecord = "info:ourfederation/svc/ObtainRecord";

struct KevRequest {
  std::string url_ver{kOpenUrlVersion};
  ContentURI rft_id;
  ContentURI svc_id;
  QueryPairs extra;  // preserved verbatim, in order

  friend bool operator==(const KevRequest& a, const KevRequest& b) {
    return a.url_ver == b.url_ver && a.rft_id == b.rft_id && a.svc_id == b.svc_id &&
           a.extra == b.extra;
  }
};

inline KevRequest parse_kev(std::string_view query) {
  KevRequest req;
  std::optional<std::string> url_ver, rft_id, svc_id;
  for (const auto& [k, v] : parse_query(query)) {
    auto set = [&](std::optional<std::string>& slot) {
      if (slot) fail(Err::BadArgument, "repeated parameter \"" + k + "\"");
      slot = v;
    };
    if (k == "url_ver") set(url_ver);
    else if (k == "rft_id") set(rft_id);
    else if (k == "svc_id") set(svc_id);
    else req.extra.emplace_back(k, v);
  }
  if (!url_ver || *url_ver != kOpenUrlVersion)
    fail(Err::UnsupportedVersion,
         "url_ver must be " + std::string(kOpenUrlVersion) +
             (url_ver ? " (got \"" + *url_ver + "\")" : " (missing)"));
  if (!rft_id) fail(Err::BadArgument, "missing rft_id");
  if (!svc_id) fail(Err::BadArgument, "missing svc_id");
  auto rft = try_classify_uri(*rft_id);
  if (!rft) fail(Err::BadArgument, "rft_id is not an absolute URI: \"" + *rft_id + "\"");
  auto svc = try_classify_uri(*svc_id);
  if (!svc) fail(Err::BadArgument, "svc_id is not an absolute URI: \"" + *svc_id + "\"");
  req.url_ver = *url_ver;
  req.rft_id = *rft;
  req.svc_id = *svc;
  return req;
}

// Fixed parameter order url_ver, rft_id, svc_id, then extras verbatim.
inline std::string compose_kev(const KevRequest& req) {
  QueryPairs pairs;
  pairs.emplace_back("url_ver", req.url_ver);
  pairs.emplace_back("rft_id", req.rft_id.value);
  pairs.emplace_back("svc_id", req.svc_id.value);
  for (const auto& p : req.extra) pairs.push_back(p);
  return compose_query(pairs);
}

// --- resumption tokens ---------------------------------------------------------

// Opaque record offset plus a fingerprint of the windowed result set; a token
// presented after the set changed no longer matches and is rejected.
struct ResumptionToken {
  uint64_t offset = 0;
  uint64_t fingerprint = 0;
};

inline std::string encode_token(const ResumptionToken& t) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%llu.%016llx", static_cast<unsigned long long>(t.offset),
                static_cast<unsigned long long>(t.fingerprint));
  return buf;
}

inline std::optional<ResumptionToken> decode_token(std::string_view s) {
  size_t dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || s.size() - dot - 1 != 16) return std::nullopt;
  ResumptionToken t;
  for (char c : s.substr(0, dot)) {
    if (c < '0' || c > '9') return std::nullopt;
    t.offset = t.offset * 10 + static_cast<uint64_t>(c - '0');
  }
  for (char c : s.substr(dot + 1)) {
    uint64_t d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else return std::nullopt;
    t.fingerprint = t.fingerprint * 16 + d;
  }
  return t;
}

// --- response envelope ----------------------------------------------------------

inline constexpr std::string_view kPmhXmlns = "http://www.openarchives.org/OAI/2.0/";

struct PmhItem {
  std::string identifier;
  FedDatetime datestamp;
  std::string metadata;  // embedded document bytes; empty for header-only items
  friend bool operator==(const PmhItem&, const PmhItem&) = default;
};

namespace detail {

inline void open_envelope(std::string& out, FedDatetime response_date, const PmhRequest& req,
                          const std::string& base_url, bool echo_arguments) {
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OAI-PMH xmlns=\"";
  out += kPmhXmlns;
  out += "\">\n  <responseDate>" + response_date.to_string() + "</responseDate>\n  <request";
  if (echo_arguments) {
    out += " verb=\"" + std::string(pmh_verb_name(req.verb)) + "\"";
    if (req.metadata_prefix)
      out += " metadataPrefix=\"" + xml::escape_attr(*req.metadata_prefix) + "\"";
    if (req.identifier) out += " identifier=\"" + xml::escape_attr(*req.identifier) + "\"";
    if (req.from_raw) out += " from=\"" + xml::escape_attr(*req.from_raw) + "\"";
    if (req.until_raw) out += " until=\"" + xml::escape_attr(*req.until_raw) + "\"";
    if (req.resumption_token)
      out += " resumptionToken=\"" + xml::escape_attr(*req.resumption_token) + "\"";
  }
  out += ">" + xml::escape_text(base_url) + "</request>\n";
}

inline void write_record(std::string& out, const PmhItem& item, bool with_metadata) {
  if (with_metadata) {
    out += "    <record>\n      <header><identifier>" + xml::escape_text(item.identifier) +
           "</identifier><datestamp>" + item.datestamp.to_string() +
           "</datestamp></header>\n      <metadata>";
    out += item.metadata;  // verbatim
    out += "</metadata>\n    </record>\n";
  } else {
    out += "    <header><identifier>" + xml::escape_text(item.identifier) +
           "</identifier><datestamp>" + item.datestamp.to_string() + "</datestamp></header>\n";
  }
}

}  // namespace detail

// OAI-PMH error envelope; per protocol the request element omits the
// arguments when the request itself was illegal.
inline std::string render_pmh_error(FedDatetime response_date, const PmhRequest& req,
                                    const std::string& base_url, const std::string& code,
                                    const std::string& message) {
  std::string out;
  bool echo = code != "badVerb" && code != "badArgument";
  detail::open_envelope(out, response_date, req, base_url, echo);
  out += "  <error code=\"" + xml::escape_attr(code) + "\">" + xml::escape_text(message) +
         "</error>\n</OAI-PMH>\n";
  return out;
}

inline std::string render_pmh_list(FedDatetime response_date, const PmhRequest& req,
                                   const std::string& base_url, const std::vector<PmhItem>& page,
                                   const std::optional<std::string>& resumption_token) {
  std::string out;
  detail::open_envelope(out, response_date, req, base_url, true);
  const char* verb = pmh_verb_name(req.verb);
  out += "  <" + std::string(verb) + ">\n";
  bool with_metadata = req.verb == PmhVerb::ListRecords || req.verb == PmhVerb::GetRecord;
  for (const auto& item : page) detail::write_record(out, item, with_metadata);
  if (resumption_token)
    out += "    <resumptionToken>" + xml::escape_text(*resumption_token) + "</resumptionToken>\n";
  out += "  </" + std::string(verb) + ">\n</OAI-PMH>\n";
  return out;
}

struct IdentifyInfo {
  std::string repository_name;
  std::string base_url;
  std::string repository_uri;
  std::string earliest_datestamp = "1970-01-01T00:00:00Z";
  std::vector<std::pair<std::string, std::string>> extra;  // name -> value description fields
};

inline std::string render_pmh_identify(FedDatetime response_date, const PmhRequest& req,
                                       const IdentifyInfo& info) {
  std::string out;
  detail::open_envelope(out, response_date, req, info.base_url, true);
  out += "  <Identify>\n    <repositoryName>" + xml::escape_text(info.repository_name) +
         "</repositoryName>\n    <baseURL>" + xml::escape_text(info.base_url) +
         "</baseURL>\n    <protocolVersion>2.0</protocolVersion>\n    <earliestDatestamp>" +
         info.earliest_datestamp +
         "</earliestDatestamp>\n    <deletedRecord>no</deletedRecord>\n    "
         "<granularity>YYYY-MM-DDThh:mm:ssZ</granularity>\n    <description><repository uri=\"" +
         xml::escape_attr(info.repository_uri) + "\"";
  for (const auto& [k, v] : info.extra)
    out += " " + k + "=\"" + xml::escape_attr(v) + "\"";
  out += "/></description>\n  </Identify>\n</OAI-PMH>\n";
  return out;
}

// Parsed view of a response envelope, as the harvest client sees it.
struct PmhEnvelope {
  std::optional<std::string> error_code;
  std::string error_message;
  std::vector<PmhItem> items;
  std::optional<std::string> resumption_token;
  const xml::Element* verb_element = nullptr;  // valid only while the tree lives
};

// Extracts records (with verbatim metadata bytes via element spans),
// headers, the resumption token, or the protocol error.
inline PmhEnvelope parse_pmh_response(std::string_view bytes) {
  xml::Element root = xml::parse_document(bytes);
  PmhEnvelope env;
  if (root.name != "OAI-PMH") fail(Err::ProtocolError, "unexpected root <" + root.name + ">");
  if (const xml::Element* err = root.first("error")) {
    const std::string* code = err->attr("code");
    env.error_code = code ? *code : "unknown";
    env.error_message = err->text;
    return env;
  }
  for (const auto& section : root.children) {
    if (section.name != "ListRecords" && section.name != "ListIdentifiers" &&
        section.name != "GetRecord")
      continue;
    auto read_header = [](const xml::Element& h, PmhItem& item) {
      const xml::Element* id = h.first("identifier");
      const xml::Element* ds = h.first("datestamp");
      if (!id || !ds) fail(Err::ProtocolError, "header missing identifier or datestamp");
      auto dt = FedDatetime::try_parse(ds->text);
      if (!dt) fail(Err::ProtocolError, "bad datestamp \"" + ds->text + "\"");
      item.identifier = id->text;
      item.datestamp = *dt;
    };
    for (const auto& c : section.children) {
      if (c.name == "record") {
        PmhItem item;
        const xml::Element* h = c.first("header");
        if (!h) fail(Err::ProtocolError, "record without header");
        read_header(*h, item);
        if (const xml::Element* md = c.first("metadata")) {
          // Content span, so embedded document bytes survive verbatim.
          item.metadata =
              std::string(bytes.substr(md->content_begin, md->content_end - md->content_begin));
        }
        env.items.push_back(std::move(item));
      } else if (c.name == "header") {
        PmhItem item;
        read_header(c, item);
        env.items.push_back(std::move(item));
      } else if (c.name == "resumptionToken") {
        if (!c.text.empty()) env.resumption_token = c.text;
      }
    }
  }
  return env;
}

// Maps library error codes onto wire error codes for the OAI endpoints.
inline const char* pmh_error_code(Err e) {
  switch (e) {
    case Err::BadVerb: return "badVerb";
    case Err::BadResumptionToken: return "badResumptionToken";
    case Err::NoRecordsMatch: return "noRecordsMatch";
    case Err::IdDoesNotExist: return "idDoesNotExist";
    case Err::NotFound: return "idDoesNotExist";
    default: return "badArgument";
  }
}

}  // namespace fedgate::wire

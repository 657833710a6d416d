#pragma once

// Verb dispatch, paging and error rendering for an OAI endpoint. Tier-1
// nodes and the Tier-3 facade both run their HTTP surface through this one
// handler, so the two accept exactly the same verb/parameter grammar.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/sha256.hpp"
#include "fedgate/wire.hpp"

namespace fedgate {

struct PmhHead {
  std::string identifier;
  FedDatetime datestamp;
  friend bool operator==(const PmhHead&, const PmhHead&) = default;
};

struct PmhSourceOps {
  // All heads matching the window under a prefix, in (datetime, id) order.
  // `session` carries the resumption fingerprint on continuation requests, so
  // sources that materialize expensively (the Tier-3 fan-out) can serve the
  // session's snapshot instead of recomputing.
  std::function<std::vector<PmhHead>(const std::string& prefix,
                                     const std::optional<FedDatetime>& from,
                                     const std::optional<FedDatetime>& until,
                                     const std::optional<uint64_t>& session)>
      list_heads;
  // Metadata document for one id under a prefix; nullopt when unknown.
  std::function<std::optional<std::string>(const std::string& prefix, const std::string& id)>
      metadata;
  // Datestamp for GetRecord responses.
  std::function<std::optional<FedDatetime>(const std::string& id)> datestamp;
};

class PmhEndpoint {
 public:
  struct Reply {
    int status = 200;
    std::string body;
  };

  PmhEndpoint(wire::IdentifyInfo identify, std::vector<std::string> prefixes, size_t page_size,
              PmhSourceOps ops)
      : identify_(std::move(identify)),
        prefixes_(std::move(prefixes)),
        page_size_(page_size ? page_size : 1),
        ops_(std::move(ops)) {}

  Reply handle(const std::string& query) const { return handle(query, FedDatetime::now()); }

  Reply handle(const std::string& query, FedDatetime response_date) const {
    wire::PmhRequest req;
    try {
      req = wire::parse_pmh(query);
    } catch (const FedError& e) {
      return {200, wire::render_pmh_error(response_date, req, identify_.base_url,
                                          wire::pmh_error_code(e.code()), e.what())};
    }
    try {
      switch (req.verb) {
        case wire::PmhVerb::Identify:
          return {200, wire::render_pmh_identify(response_date, req, identify_)};
        case wire::PmhVerb::GetRecord:
          return get_record(req, response_date);
        case wire::PmhVerb::ListRecords:
        case wire::PmhVerb::ListIdentifiers:
          return list(req, response_date);
      }
    } catch (const FedError& e) {
      switch (e.code()) {
        case Err::BadVerb:
        case Err::BadArgument:
        case Err::BadResumptionToken:
        case Err::NoRecordsMatch:
        case Err::IdDoesNotExist:
        case Err::NotFound:
          return {200, wire::render_pmh_error(response_date, req, identify_.base_url,
                                              wire::pmh_error_code(e.code()), e.what())};
        default:
          throw;  // upstream trouble is the transport layer's to report
      }
    }
    return {500, "unreachable"};
  }

 private:
  bool prefix_supported(const std::string& p) const {
    for (const auto& s : prefixes_)
      if (s == p) return true;
    return false;
  }

  Reply get_record(const wire::PmhRequest& req, FedDatetime response_date) const {
    if (!prefix_supported(*req.metadata_prefix))
      fail(Err::BadArgument, "unsupported metadataPrefix \"" + *req.metadata_prefix + "\"");
    auto doc = ops_.metadata(*req.metadata_prefix, *req.identifier);
    auto stamp = ops_.datestamp(*req.identifier);
    if (!doc || !stamp) fail(Err::IdDoesNotExist, "unknown identifier " + *req.identifier);
    wire::PmhItem item{*req.identifier, *stamp, *doc};
    return {200, wire::render_pmh_list(response_date, req, identify_.base_url, {item}, {})};
  }

 public:
  // Fingerprint binds a token to the windowed result set: if the set changes
  // between pages the token stops matching and the session is rejected.
  static uint64_t fingerprint(const std::string& prefix, const std::optional<FedDatetime>& from,
                              const std::optional<FedDatetime>& until,
                              const std::vector<PmhHead>& heads) {
    std::string key = prefix + "|" + (from ? from->to_string() : "") + "|" +
                      (until ? until->to_string() : "") + "|" + std::to_string(heads.size());
    if (!heads.empty()) key += "|" + heads.front().identifier + "|" + heads.back().identifier;
    return fnv1a64(key);
  }

 private:

  // Token layout: offset.fp.prefix.from.until (window travels in the token
  // because resumptionToken excludes every other argument).
  static std::string encode_session_token(uint64_t offset, uint64_t fp, const std::string& prefix,
                                          const std::optional<FedDatetime>& from,
                                          const std::optional<FedDatetime>& until) {
    char head[40];
    std::snprintf(head, sizeof(head), "%llu.%016llx.", static_cast<unsigned long long>(offset),
                  static_cast<unsigned long long>(fp));
    return std::string(head) + prefix + "." + (from ? from->to_string() : "") + "." +
           (until ? until->to_string() : "");
  }

  struct SessionToken {
    uint64_t offset = 0;
    uint64_t fp = 0;
    std::string prefix;
    std::optional<FedDatetime> from, until;
  };

  static SessionToken decode_session_token(const std::string& raw) {
    std::vector<std::string> fields;
    size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
      size_t dot = raw.find('.', pos);
      if (dot == std::string::npos) fail(Err::BadResumptionToken, "malformed resumptionToken");
      fields.push_back(raw.substr(pos, dot - pos));
      pos = dot + 1;
    }
    fields.push_back(raw.substr(pos));
    auto t = wire::decode_token(fields[0] + "." + fields[1]);
    if (!t) fail(Err::BadResumptionToken, "malformed resumptionToken");
    SessionToken out;
    out.offset = t->offset;
    out.fp = t->fingerprint;
    out.prefix = fields[2];
    if (!fields[3].empty()) {
      out.from = FedDatetime::try_parse(fields[3]);
      if (!out.from) fail(Err::BadResumptionToken, "malformed resumptionToken");
    }
    if (!fields[4].empty()) {
      out.until = FedDatetime::try_parse(fields[4]);
      if (!out.until) fail(Err::BadResumptionToken, "malformed resumptionToken");
    }
    return out;
  }

  Reply list(const wire::PmhRequest& req, FedDatetime response_date) const {
    std::string prefix;
    std::optional<FedDatetime> from, until;
    uint64_t offset = 0;
    std::optional<uint64_t> expect_fp;
    if (req.resumption_token) {
      SessionToken t = decode_session_token(*req.resumption_token);
      prefix = t.prefix;
      from = t.from;
      until = t.until;
      offset = t.offset;
      expect_fp = t.fp;
      if (!prefix_supported(prefix)) fail(Err::BadResumptionToken, "stale resumptionToken");
    } else {
      prefix = *req.metadata_prefix;
      if (!prefix_supported(prefix))
        fail(Err::BadArgument, "unsupported metadataPrefix \"" + prefix + "\"");
      from = req.from_bound();
      until = req.until_bound();
    }

    std::vector<PmhHead> heads = ops_.list_heads(prefix, from, until, expect_fp);
    uint64_t fp = fingerprint(prefix, from, until, heads);
    if (expect_fp && *expect_fp != fp)
      fail(Err::BadResumptionToken, "result set changed; restart harvest");
    if (expect_fp && offset >= heads.size())
      fail(Err::BadResumptionToken, "offset past end of result set");
    if (heads.empty()) fail(Err::NoRecordsMatch, "no records match the request");

    size_t end = std::min(heads.size(), static_cast<size_t>(offset) + page_size_);
    bool with_metadata = req.verb == wire::PmhVerb::ListRecords;
    std::vector<wire::PmhItem> page;
    page.reserve(end - offset);
    for (size_t i = offset; i < end; ++i) {
      wire::PmhItem item{heads[i].identifier, heads[i].datestamp, ""};
      if (with_metadata) {
        auto doc = ops_.metadata(prefix, heads[i].identifier);
        if (!doc)
          fail(Err::IdDoesNotExist, "record vanished mid-session: " + heads[i].identifier);
        item.metadata = *doc;
      }
      page.push_back(std::move(item));
    }
    std::optional<std::string> next;
    if (end < heads.size()) next = encode_session_token(end, fp, prefix, from, until);
    return {200, wire::render_pmh_list(response_date, req, identify_.base_url, page, next)};
  }

  wire::IdentifyInfo identify_;
  std::vector<std::string> prefixes_;
  size_t page_size_;
  PmhSourceOps ops_;
};

}  // namespace fedgate

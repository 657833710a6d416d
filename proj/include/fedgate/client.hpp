#pragma once

// HTTP consumer side: one-shot GETs with timeouts, plus the harvest client
// that walks an OAI endpoint to exhaustion following resumption tokens.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#ifndef CPPHTTPLIB_THREAD_POOL_COUNT
#define CPPHTTPLIB_THREAD_POOL_COUNT 8
#endif
#include <httplib.h>

#include "fedgate/errors.hpp"
#include "fedgate/wire.hpp"

namespace fedgate {

struct UrlParts {
  std::string host_port;  // "http://host:port" form httplib wants
  std::string path;       // leading '/', no query
  std::string query;      // without '?'
};

inline UrlParts split_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(Err::BadArgument, "not an http(s) URL: " + url);
  size_t path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_start == std::string::npos) {
    parts.host_port = url;
    parts.path = "/";
    return parts;
  }
  parts.host_port = url.substr(0, path_start);
  std::string rest = url.substr(path_start);
  size_t q = rest.find('?');
  if (q == std::string::npos) {
    parts.path = rest;
  } else {
    parts.path = rest.substr(0, q);
    parts.query = rest.substr(q + 1);
  }
  return parts;
}

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

// One-shot GET. Transport failure (refused connection, timeout) raises
// Unreachable with the endpoint in the details.
inline HttpResponse http_get(const std::string& url, int timeout_ms = 5000) {
  UrlParts parts = split_url(url);
  httplib::Client cli(parts.host_port);
  cli.set_tcp_nodelay(true);
  cli.set_connection_timeout(0, timeout_ms * 1000);
  cli.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  std::string target = parts.path + (parts.query.empty() ? "" : "?" + parts.query);
  auto res = cli.Get(target);
  if (!res) fail(Err::Unreachable, "GET " + url + " failed: " + httplib::to_string(res.error()),
                 {url});
  HttpResponse out;
  out.status = res->status;
  out.body = res->body;
  out.content_type = res->get_header_value("Content-Type");
  return out;
}

struct HarvestOptions {
  std::string verb = "ListRecords";
  std::string metadata_prefix = "surrogate";
  std::optional<std::string> from;   // raw spelling, full or date-only
  std::optional<std::string> until;
  int timeout_ms = 5000;
};

// Streams records from `endpoint_base` (e.g. http://host:port/sur/oaipmh),
// following resumptionTokens until exhaustion. Yields items in server order.
// noRecordsMatch means an empty stream; other protocol error codes raise
// ProtocolError with the code in the details; transport failures raise
// Unreachable.
inline size_t harvest_stream(const std::string& endpoint_base, const HarvestOptions& opts,
                             const std::function<void(const wire::PmhItem&)>& sink) {
  wire::PmhRequest req;
  req.verb = opts.verb == "ListIdentifiers" ? wire::PmhVerb::ListIdentifiers
                                            : wire::PmhVerb::ListRecords;
  req.metadata_prefix = opts.metadata_prefix;
  req.from_raw = opts.from;
  req.until_raw = opts.until;

  size_t yielded = 0;
  std::optional<std::string> token;
  for (;;) {
    std::string query;
    if (token) {
      wire::PmhRequest cont;
      cont.verb = req.verb;
      cont.resumption_token = token;
      query = wire::compose_pmh(cont);
    } else {
      query = wire::compose_pmh(req);
    }
    HttpResponse res = http_get(endpoint_base + "?" + query, opts.timeout_ms);
    if (res.status != 200)
      fail(Err::ProtocolError, "HTTP " + std::to_string(res.status) + " from " + endpoint_base,
           {std::to_string(res.status)});
    wire::PmhEnvelope env;
    try {
      env = wire::parse_pmh_response(res.body);
    } catch (const FedError& e) {
      fail(Err::ProtocolError, "unparseable response from " + endpoint_base + ": " + e.what());
    }
    if (env.error_code) {
      if (*env.error_code == "noRecordsMatch") return yielded;
      fail(Err::ProtocolError, "server error " + *env.error_code + ": " + env.error_message,
           {*env.error_code});
    }
    for (const auto& item : env.items) {
      sink(item);
      ++yielded;
    }
    if (!env.resumption_token) return yielded;
    token = env.resumption_token;
  }
}

inline std::vector<wire::PmhItem> harvest_all(const std::string& endpoint_base,
                                              const HarvestOptions& opts) {
  std::vector<wire::PmhItem> out;
  harvest_stream(endpoint_base, opts, [&](const wire::PmhItem& item) { out.push_back(item); });
  return out;
}

}  // namespace fedgate

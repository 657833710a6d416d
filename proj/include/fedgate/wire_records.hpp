#pragma once

// XML record formats carried over the OpenURL services: <locations> for
// Locate Surrogates, <repositories> for Locate Repositories and
// <registryRecord> for Obtain Registry Record (and for registration PUTs).
// Each format has a renderer and a parser so the federator can consume what
// the lower tiers emit.

#include <optional>
#include <string>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/xml.hpp"

namespace fedgate::wire {

// --- locations ---------------------------------------------------------------

struct LocationEntry {
  std::string surrogate_uri;
  std::optional<std::string> surrogate_url;
  FedDatetime datetime;
  std::string repository_uri;
  friend bool operator==(const LocationEntry&, const LocationEntry&) = default;
  friend auto operator<=>(const LocationEntry&, const LocationEntry&) = default;
};

inline std::string render_locations(const std::string& identifier,
                                    const std::vector<LocationEntry>& entries,
                                    const std::optional<std::string>& root_repository = {}) {
  std::string out = "<locations xmlns=\"urn:fedgate:locations:1\" identifier=\"" +
                    xml::escape_attr(identifier) + "\"";
  if (root_repository) out += " repositoryURI=\"" + xml::escape_attr(*root_repository) + "\"";
  if (entries.empty()) return out + "/>\n";
  out += ">\n";
  for (const auto& e : entries) {
    out += "  <surrogate uri=\"" + xml::escape_attr(e.surrogate_uri) + "\"";
    if (e.surrogate_url) out += " url=\"" + xml::escape_attr(*e.surrogate_url) + "\"";
    out += " datetime=\"" + e.datetime.to_string() + "\"";
    if (!root_repository || e.repository_uri != *root_repository)
      out += " repositoryURI=\"" + xml::escape_attr(e.repository_uri) + "\"";
    out += "/>\n";
  }
  return out + "</locations>\n";
}

inline std::vector<LocationEntry> parse_locations(std::string_view bytes) {
  xml::Element root = xml::parse_document(bytes);
  if (root.name != "locations") fail(Err::ProtocolError, "expected <locations>");
  const std::string* root_repo = root.attr("repositoryURI");
  std::vector<LocationEntry> out;
  for (const auto& c : root.children) {
    if (c.name != "surrogate") continue;
    LocationEntry e;
    const std::string* uri = c.attr("uri");
    const std::string* dt = c.attr("datetime");
    if (!uri || !dt) fail(Err::ProtocolError, "<surrogate> missing uri or datetime");
    auto parsed = FedDatetime::try_parse(*dt);
    if (!parsed) fail(Err::ProtocolError, "bad datetime in <surrogate>");
    e.surrogate_uri = *uri;
    e.datetime = *parsed;
    if (const std::string* url = c.attr("url")) e.surrogate_url = *url;
    if (const std::string* repo = c.attr("repositoryURI")) e.repository_uri = *repo;
    else if (root_repo) e.repository_uri = *root_repo;
    out.push_back(std::move(e));
  }
  return out;
}

// --- repositories ------------------------------------------------------------

inline std::string render_repositories(const std::string& identifier,
                                       const std::vector<std::string>& repository_uris) {
  std::string out = "<repositories xmlns=\"urn:fedgate:repositories:1\" identifier=\"" +
                    xml::escape_attr(identifier) + "\"";
  if (repository_uris.empty()) return out + "/>\n";  // empty list renders as empty element
  out += ">\n";
  for (const auto& r : repository_uris)
    out += "  <repository uri=\"" + xml::escape_attr(r) + "\"/>\n";
  return out + "</repositories>\n";
}

inline std::vector<std::string> parse_repositories(std::string_view bytes) {
  xml::Element root = xml::parse_document(bytes);
  if (root.name != "repositories") fail(Err::ProtocolError, "expected <repositories>");
  std::vector<std::string> out;
  for (const auto& c : root.children) {
    if (c.name != "repository") continue;
    const std::string* uri = c.attr("uri");
    if (!uri) fail(Err::ProtocolError, "<repository> missing uri");
    out.push_back(*uri);
  }
  return out;
}

// --- registry records ----------------------------------------------------------

struct RegistryRecordDoc {
  std::string subject;
  std::vector<InterfaceBinding> interfaces;             // component queries / registrations
  std::optional<std::string> interface_url;             // interface-URI queries
  std::vector<std::pair<std::string, std::string>> metadata;
  friend bool operator==(const RegistryRecordDoc&, const RegistryRecordDoc&) = default;
};

inline std::string render_registry_record(const RegistryRecordDoc& rec) {
  std::string out = "<registryRecord xmlns=\"urn:fedgate:registry:1\" subject=\"" +
                    xml::escape_attr(rec.subject) + "\"";
  if (rec.interfaces.empty() && !rec.interface_url && rec.metadata.empty()) return out + "/>\n";
  out += ">\n";
  for (const auto& b : rec.interfaces) {
    out += "  <interface uri=\"" + xml::escape_attr(b.interface_uri.value) + "\" type=\"" +
           interface_type_name(b.interface_type) + "\" url=\"" +
           xml::escape_attr(b.interface_url.value) + "\"/>\n";
  }
  if (rec.interface_url)
    out += "  <interfaceURL>" + xml::escape_text(*rec.interface_url) + "</interfaceURL>\n";
  for (const auto& [k, v] : rec.metadata)
    out += "  <meta key=\"" + xml::escape_attr(k) + "\">" + xml::escape_text(v) + "</meta>\n";
  return out + "</registryRecord>\n";
}

inline RegistryRecordDoc parse_registry_record(std::string_view bytes) {
  xml::Element root = xml::parse_document(bytes);
  if (root.name != "registryRecord") fail(Err::ProtocolError, "expected <registryRecord>");
  RegistryRecordDoc rec;
  if (const std::string* s = root.attr("subject")) rec.subject = *s;
  for (const auto& c : root.children) {
    if (c.name == "interface") {
      const std::string* uri = c.attr("uri");
      const std::string* type = c.attr("type");
      const std::string* url = c.attr("url");
      if (!uri || !type || !url) fail(Err::ProtocolError, "<interface> missing uri/type/url");
      auto t = interface_type_from_name(*type);
      if (!t) fail(Err::ProtocolError, "unknown interface type \"" + *type + "\"");
      rec.interfaces.push_back(
          InterfaceBinding{classify_uri(*uri), *t, classify_uri(*url)});
    } else if (c.name == "interfaceURL") {
      rec.interface_url = c.text;
    } else if (c.name == "meta") {
      const std::string* key = c.attr("key");
      if (!key) fail(Err::ProtocolError, "<meta> missing key");
      rec.metadata.emplace_back(*key, c.text);
    }
  }
  return rec;
}

// --- identifier tuples (the "identifiers" metadata prefix) ---------------------

struct IdentifierTupleDoc {
  std::string surrogate_uri;
  FedDatetime datetime;
  std::vector<std::string> do_uris;
  std::vector<std::string> ds_uris;
  friend bool operator==(const IdentifierTupleDoc&, const IdentifierTupleDoc&) = default;
};

inline std::string render_identifier_tuple(const IdentifierTupleDoc& t) {
  std::string out = "<identifiers xmlns=\"urn:fedgate:identifiers:1\" surrogateURI=\"" +
                    xml::escape_attr(t.surrogate_uri) + "\" datetime=\"" +
                    t.datetime.to_string() + "\">\n";
  for (const auto& d : t.do_uris) out += "  <doURI>" + xml::escape_text(d) + "</doURI>\n";
  for (const auto& d : t.ds_uris) out += "  <dsURI>" + xml::escape_text(d) + "</dsURI>\n";
  return out + "</identifiers>\n";
}

inline IdentifierTupleDoc parse_identifier_tuple(std::string_view bytes) {
  xml::Element root = xml::parse_document(bytes);
  if (root.name != "identifiers") fail(Err::ProtocolError, "expected <identifiers>");
  IdentifierTupleDoc t;
  const std::string* uri = root.attr("surrogateURI");
  const std::string* dt = root.attr("datetime");
  if (!uri || !dt) fail(Err::ProtocolError, "<identifiers> missing surrogateURI or datetime");
  auto parsed = FedDatetime::try_parse(*dt);
  if (!parsed) fail(Err::ProtocolError, "bad datetime in <identifiers>");
  t.surrogate_uri = *uri;
  t.datetime = *parsed;
  for (const auto& c : root.children) {
    if (c.name == "doURI") t.do_uris.push_back(c.text);
    if (c.name == "dsURI") t.ds_uris.push_back(c.text);
  }
  return t;
}

// Tiny metadata document for the "datetime" prefix on /ds/oaipmh.
inline std::string render_datetime_doc(FedDatetime dt) {
  return "<datetime xmlns=\"urn:fedgate:datetime:1\">" + dt.to_string() + "</datetime>\n";
}

// --- referrals (Tier-3 Locate Surrogates in Referral mode) ---------------------

inline std::string render_referrals(const std::string& identifier,
                                    const std::vector<std::string>& request_urls) {
  std::string out = "<referrals xmlns=\"urn:fedgate:referrals:1\" identifier=\"" +
                    xml::escape_attr(identifier) + "\"";
  if (request_urls.empty()) return out + "/>\n";
  out += ">\n";
  for (const auto& u : request_urls) out += "  <request url=\"" + xml::escape_attr(u) + "\"/>\n";
  return out + "</referrals>\n";
}

inline std::vector<std::string> parse_referrals(std::string_view bytes) {
  xml::Element root = xml::parse_document(bytes);
  if (root.name != "referrals") fail(Err::ProtocolError, "expected <referrals>");
  std::vector<std::string> out;
  for (const auto& c : root.children) {
    if (c.name != "request") continue;
    const std::string* url = c.attr("url");
    if (!url) fail(Err::ProtocolError, "<request> missing url");
    out.push_back(*url);
  }
  return out;
}

// --- error body ----------------------------------------------------------------

inline std::string render_error_body(Err code, const std::string& message,
                                     const std::vector<std::string>& details = {}) {
  std::string out = "<error xmlns=\"urn:fedgate:error:1\" code=\"" + std::string(err_name(code)) +
                    "\">" + xml::escape_text(message);
  for (const auto& d : details) out += "<detail>" + xml::escape_text(d) + "</detail>";
  return out + "</error>\n";
}

}  // namespace fedgate::wire

#pragma once

// The federation-wide Surrogate serialization format: a small XML dialect in
// the urn:fedgate:surrogate:1 namespace with a canonical byte form (fixed
// attribute order, fixed child order, LF line endings). parse(serialize(s))
// is the identity for every valid Surrogate, and equal Surrogates always
// produce byte-identical documents.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedgate/core.hpp"
#include "fedgate/errors.hpp"
#include "fedgate/xml.hpp"

namespace fedgate {

inline constexpr std::string_view kSurrogateXmlns = "urn:fedgate:surrogate:1";

struct SurrogateDocument {
  std::string bytes;
  friend bool operator==(const SurrogateDocument&, const SurrogateDocument&) = default;
};

struct Violation {
  std::string path;     // e.g. /surrogate/datastream[1]
  std::string message;
};

namespace detail {

inline void require_uri_kind(const std::string& raw, UriKind want, const std::string& path,
                             const std::string& what, std::vector<Violation>& out) {
  auto uri = try_classify_uri(raw);
  if (!uri) {
    out.push_back({path, what + " is not an absolute URI: \"" + raw + "\""});
    return;
  }
  if (uri->kind != want) {
    const char* need = want == UriKind::ProtocolBased ? "protocol-based" : "non-protocol-based";
    out.push_back({path, what + " must be " + need + ": \"" + raw + "\""});
  }
}

inline std::vector<Property> read_properties(const xml::Element& el, const std::string& path,
                                             std::vector<Violation>& out) {
  std::vector<Property> props;
  int n = 0;
  for (const auto& c : el.children) {
    if (c.name != "property") continue;
    ++n;
    std::string ppath = path + "/property[" + std::to_string(n) + "]";
    const std::string* key = c.attr("key");
    if (!key) {
      out.push_back({ppath, "missing key attribute"});
      continue;
    }
    if (!is_valid_absolute_uri(*key))
      out.push_back({ppath, "property key is not an absolute URI: \"" + *key + "\""});
    if (!c.children.empty()) out.push_back({ppath, "property must not have child elements"});
    props.push_back(Property{*key, c.text});
  }
  return props;
}

// Builds the Surrogate while collecting every detectable violation. The
// returned value is only meaningful when `out` stays empty.
inline Surrogate read_surrogate(const xml::Element& root, std::vector<Violation>& out) {
  Surrogate s;
  const std::string rpath = "/surrogate";
  if (root.name != "surrogate") {
    out.push_back({"/" + root.name, "root element must be <surrogate>"});
    return s;
  }
  const std::string* xmlns = root.attr("xmlns");
  if (!xmlns || *xmlns != kSurrogateXmlns)
    out.push_back({rpath, std::string("xmlns must be ") + std::string(kSurrogateXmlns)});

  if (const std::string* su = root.attr("surrogateURI")) {
    require_uri_kind(*su, UriKind::NonProtocolBased, rpath, "surrogateURI", out);
    s.surrogate_uri = ContentURI{*su, UriKind::NonProtocolBased};
    if (auto c = try_classify_uri(*su)) s.surrogate_uri = *c;
  } else {
    out.push_back({rpath, "missing surrogateURI"});
  }
  if (const std::string* sl = root.attr("surrogateURL")) {
    auto uri = try_classify_uri(*sl);
    if (!uri)
      out.push_back({rpath, "surrogateURL is not an absolute URI: \"" + *sl + "\""});
    else
      s.surrogate_url = *uri;
  }
  if (const std::string* dt = root.attr("datetime")) {
    auto parsed = FedDatetime::try_parse(*dt);
    if (!parsed)
      out.push_back({rpath, "bad datetime: \"" + *dt + "\""});
    else
      s.surrogate_datetime = *parsed;
  } else {
    out.push_back({rpath, "missing datetime"});
  }
  for (const auto& a : root.attrs) {
    if (a.name != "xmlns" && a.name != "surrogateURI" && a.name != "surrogateURL" &&
        a.name != "datetime")
      out.push_back({rpath, "unexpected attribute \"" + a.name + "\""});
  }
  if (!xml::is_ws_only(root.text)) out.push_back({rpath, "unexpected character data"});

  int n_do = 0, n_ds = 0;
  for (const auto& c : root.children) {
    if (c.name == "doURI") {
      ++n_do;
      std::string path = rpath + "/doURI[" + std::to_string(n_do) + "]";
      if (!c.attrs.empty() || !c.children.empty())
        out.push_back({path, "doURI carries only text content"});
      auto uri = try_classify_uri(c.text);
      if (!uri) {
        out.push_back({path, "not an absolute URI: \"" + c.text + "\""});
        continue;
      }
      for (const auto& prev : s.object.do_uris)
        if (prev.value == uri->value) out.push_back({path, "duplicate doURI \"" + uri->value + "\""});
      s.object.do_uris.push_back(*uri);
    } else if (c.name == "datastream") {
      ++n_ds;
      std::string path = rpath + "/datastream[" + std::to_string(n_ds) + "]";
      DatastreamRef ds;
      const std::string* uri = c.attr("uri");
      const std::string* url = c.attr("url");
      if (!uri && !url) out.push_back({path, "datastream needs a uri or a url"});
      if (uri) {
        require_uri_kind(*uri, UriKind::NonProtocolBased, path, "uri", out);
        if (auto v = try_classify_uri(*uri)) ds.ds_uri = *v;
      }
      if (url) {
        require_uri_kind(*url, UriKind::ProtocolBased, path, "url", out);
        if (auto v = try_classify_uri(*url)) ds.ds_url = *v;
      }
      if (const std::string* dt = c.attr("datetime")) {
        auto parsed = FedDatetime::try_parse(*dt);
        if (!parsed)
          out.push_back({path, "bad datetime: \"" + *dt + "\""});
        else
          ds.ds_datetime = *parsed;
      }
      if (const std::string* mt = c.attr("mediaType")) {
        if (mt->empty())
          out.push_back({path, "empty mediaType"});
        else
          ds.media_type = *mt;
      } else {
        out.push_back({path, "missing mediaType"});
      }
      for (const auto& a : c.attrs) {
        if (a.name != "uri" && a.name != "url" && a.name != "datetime" && a.name != "mediaType")
          out.push_back({path, "unexpected attribute \"" + a.name + "\""});
      }
      if (!xml::is_ws_only(c.text)) out.push_back({path, "unexpected character data"});
      for (const auto& g : c.children)
        if (g.name != "property")
          out.push_back({path, "unexpected element <" + g.name + ">"});
      ds.properties = read_properties(c, path, out);
      s.datastreams.push_back(std::move(ds));
    } else if (c.name == "property") {
      // handled below, in document order among properties
    } else {
      out.push_back({rpath, "unexpected element <" + c.name + ">"});
    }
  }
  if (n_do == 0) out.push_back({rpath, "missing doURI"});
  s.properties = read_properties(root, rpath, out);
  return s;
}

inline void write_properties(std::string& out, const std::vector<Property>& props,
                             std::string_view indent) {
  for (const auto& p : props) {
    out += indent;
    out += "<property key=\"" + xml::escape_attr(p.key_uri) + "\"";
    if (p.value.empty()) {
      out += "/>\n";
    } else {
      out += ">" + xml::escape_text(p.value) + "</property>\n";
    }
  }
}

}  // namespace detail

// Violations that make a byte string unusable as a Surrogate. Empty result
// means parse_surrogate will succeed on the same input.
inline std::vector<Violation> validate_surrogate(std::string_view doc) {
  std::vector<Violation> out;
  xml::Element root;
  try {
    root = xml::parse_document(doc);
  } catch (const FedError& e) {
    out.push_back({"/", e.what()});
    return out;
  }
  detail::read_surrogate(root, out);
  return out;
}

// Returns the Surrogate a document encodes. Malformed XML raises ParseError;
// a well-formed document that breaks a schema rule raises SchemaError whose
// message starts with the element path.
inline Surrogate parse_surrogate(std::string_view doc) {
  xml::Element root = xml::parse_document(doc);  // ParseError on malformed bytes
  std::vector<Violation> violations;
  Surrogate s = detail::read_surrogate(root, violations);
  if (!violations.empty())
    fail(Err::SchemaError, violations.front().path + ": " + violations.front().message);
  return s;
}

inline Surrogate parse_surrogate(const SurrogateDocument& doc) { return parse_surrogate(doc.bytes); }

// Structural checks for a Surrogate value itself (the same rules the parser
// enforces, minus XML concerns).
inline std::vector<std::string> check_surrogate(const Surrogate& s) {
  std::vector<std::string> out;
  if (!is_valid_absolute_uri(s.surrogate_uri.value))
    out.push_back("surrogate_uri is not an absolute URI");
  else if (classify_uri(s.surrogate_uri.value).kind != UriKind::NonProtocolBased)
    out.push_back("surrogate_uri must be non-protocol-based");
  if (s.surrogate_url && !is_valid_absolute_uri(s.surrogate_url->value))
    out.push_back("surrogate_url is not an absolute URI");
  if (s.object.do_uris.empty()) out.push_back("at least one DO-URI is required");
  for (size_t i = 0; i < s.object.do_uris.size(); ++i) {
    if (!is_valid_absolute_uri(s.object.do_uris[i].value))
      out.push_back("do_uris[" + std::to_string(i) + "] is not an absolute URI");
    for (size_t j = i + 1; j < s.object.do_uris.size(); ++j)
      if (s.object.do_uris[i].value == s.object.do_uris[j].value)
        out.push_back("duplicate DO-URI \"" + s.object.do_uris[i].value + "\"");
  }
  for (size_t i = 0; i < s.datastreams.size(); ++i) {
    const auto& ds = s.datastreams[i];
    std::string at = "datastreams[" + std::to_string(i) + "]";
    if (!ds.ds_uri && !ds.ds_url) out.push_back(at + " needs a ds_uri or a ds_url");
    if (ds.ds_uri && classify_uri(ds.ds_uri->value).kind != UriKind::NonProtocolBased)
      out.push_back(at + ".ds_uri must be non-protocol-based");
    if (ds.ds_url && classify_uri(ds.ds_url->value).kind != UriKind::ProtocolBased)
      out.push_back(at + ".ds_url must be protocol-based");
    if (ds.media_type.empty()) out.push_back(at + ".media_type is empty");
    for (const auto& p : ds.properties)
      if (!is_valid_absolute_uri(p.key_uri)) out.push_back(at + " property key is not a URI");
  }
  for (const auto& p : s.properties)
    if (!is_valid_absolute_uri(p.key_uri)) out.push_back("property key is not a URI");
  return out;
}

// Canonical, deterministic serialization. Throws BadArgument if `s` violates
// the Surrogate invariants (callers are expected to hand in valid values).
inline SurrogateDocument serialize_surrogate(const Surrogate& s) {
  auto problems = check_surrogate(s);
  if (!problems.empty()) fail(Err::BadArgument, "invalid Surrogate: " + problems.front());

  std::string out;
  out.reserve(256 + 64 * s.datastreams.size());
  out += "<surrogate xmlns=\"";
  out += kSurrogateXmlns;
  out += "\" surrogateURI=\"" + xml::escape_attr(s.surrogate_uri.value) + "\"";
  if (s.surrogate_url) out += " surrogateURL=\"" + xml::escape_attr(s.surrogate_url->value) + "\"";
  out += " datetime=\"" + s.surrogate_datetime.to_string() + "\">\n";
  for (const auto& d : s.object.do_uris)
    out += "  <doURI>" + xml::escape_text(d.value) + "</doURI>\n";
  for (const auto& ds : s.datastreams) {
    out += "  <datastream";
    if (ds.ds_uri) out += " uri=\"" + xml::escape_attr(ds.ds_uri->value) + "\"";
    if (ds.ds_url) out += " url=\"" + xml::escape_attr(ds.ds_url->value) + "\"";
    if (ds.ds_datetime) out += " datetime=\"" + ds.ds_datetime->to_string() + "\"";
    out += " mediaType=\"" + xml::escape_attr(ds.media_type) + "\"";
    if (ds.properties.empty()) {
      out += "/>\n";
    } else {
      out += ">\n";
      detail::write_properties(out, ds.properties, "    ");
      out += "  </datastream>\n";
    }
  }
  detail::write_properties(out, s.properties, "  ");
  out += "</surrogate>\n";
  return SurrogateDocument{std::move(out)};
}

}  // namespace fedgate

#pragma once

// Minimal non-validating XML reader/writer: the subset the federation's wire
// formats and containers need (elements, attributes, character data, the five
// predefined entities, numeric character references, comments, CDATA).
// DOCTYPE is rejected. The parser never crashes on arbitrary bytes; it throws
// FedError(Err::ParseError) with a byte offset instead.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedgate/errors.hpp"

namespace fedgate::xml {

struct Attr {
  std::string name;
  std::string value;
};

struct Element {
  std::string name;
  std::vector<Attr> attrs;
  std::string text;  // concatenated character data directly inside this element
  std::vector<Element> children;
  // Byte spans in the parsed input: the whole element ('<' through closing
  // '>') and its content (between start and end tag). Lets callers recover
  // embedded documents verbatim.
  size_t span_begin = 0;
  size_t span_end = 0;
  size_t content_begin = 0;
  size_t content_end = 0;

  const std::string* attr(std::string_view n) const {
    for (const auto& a : attrs)
      if (a.name == n) return &a.value;
    return nullptr;
  }

  const Element* first(std::string_view n) const {
    for (const auto& c : children)
      if (c.name == n) return &c;
    return nullptr;
  }

  std::vector<const Element*> all(std::string_view n) const {
    std::vector<const Element*> out;
    for (const auto& c : children)
      if (c.name == n) out.push_back(&c);
    return out;
  }
};

// --- escaping -------------------------------------------------------------

inline std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string escape_attr(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      case '\t': out += "&#9;"; break;
      case '\r': out += "&#13;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// --- parsing ---------------------------------------------------------------

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view in) : in_(in) {}

  Element parse_document() {
    skip_bom();
    skip_misc(true);
    if (eof() || peek() != '<') err("expected root element");
    Element root = parse_element(0);
    skip_misc(false);
    if (!eof()) err("content after document element");
    return root;
  }

 private:
  [[noreturn]] void err(const std::string& what) {
    fail(Err::ParseError, what + " at byte " + std::to_string(pos_));
  }

  bool eof() const { return pos_ >= in_.size(); }
  char peek() const { return in_[pos_]; }
  bool has(size_t n) const { return pos_ + n <= in_.size(); }
  bool starts_with(std::string_view s) const {
    return has(s.size()) && in_.substr(pos_, s.size()) == s;
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

  static bool name_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' ||
           static_cast<unsigned char>(c) >= 0x80;
  }
  static bool name_char(char c) {
    return name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
  }

  void skip_bom() {
    if (starts_with("\xef\xbb\xbf")) pos_ += 3;
  }

  void skip_ws() {
    while (!eof() && is_space(peek())) ++pos_;
  }

  // Whitespace, comments, PIs and (in the prolog) the XML declaration.
  void skip_misc(bool prolog) {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        size_t end = in_.find("?>", pos_ + 2);
        if (end == std::string_view::npos) err("unterminated processing instruction");
        pos_ = end + 2;
      } else if (starts_with("<!--")) {
        size_t end = in_.find("-->", pos_ + 4);
        if (end == std::string_view::npos) err("unterminated comment");
        pos_ = end + 3;
      } else if (prolog && starts_with("<!DOCTYPE")) {
        err("DOCTYPE is not supported");
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    if (eof() || !name_start(peek())) err("expected name");
    size_t start = pos_;
    ++pos_;
    while (!eof() && name_char(peek())) ++pos_;
    return std::string(in_.substr(start, pos_ - start));
  }

  void append_utf8(std::string& out, uint32_t cp) {
    if (cp > 0x10ffff) err("character reference out of range");
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }

  void parse_entity(std::string& out) {
    // pos_ is at '&'
    size_t end = in_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 12) err("unterminated entity reference");
    std::string_view body = in_.substr(pos_ + 1, end - pos_ - 1);
    if (body == "amp") out.push_back('&');
    else if (body == "lt") out.push_back('<');
    else if (body == "gt") out.push_back('>');
    else if (body == "quot") out.push_back('"');
    else if (body == "apos") out.push_back('\'');
    else if (!body.empty() && body[0] == '#') {
      uint32_t cp = 0;
      bool any = false;
      if (body.size() > 1 && (body[1] == 'x' || body[1] == 'X')) {
        for (char c : body.substr(2)) {
          uint32_t d;
          if (c >= '0' && c <= '9') d = c - '0';
          else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
          else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
          else err("bad character reference");
          cp = cp * 16 + d;
          if (cp > 0x10ffff) err("character reference out of range");
          any = true;
        }
      } else {
        for (char c : body.substr(1)) {
          if (c < '0' || c > '9') err("bad character reference");
          cp = cp * 10 + static_cast<uint32_t>(c - '0');
          if (cp > 0x10ffff) err("character reference out of range");
          any = true;
        }
      }
      if (!any) err("empty character reference");
      append_utf8(out, cp);
    } else {
      err("unknown entity reference");
    }
    pos_ = end + 1;
  }

  std::string parse_attr_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) err("expected quoted attribute value");
    char quote = peek();
    ++pos_;
    std::string out;
    while (!eof() && peek() != quote) {
      char c = peek();
      if (c == '<') err("'<' in attribute value");
      if (c == '&') {
        parse_entity(out);
      } else {
        out.push_back(c);
        ++pos_;
      }
    }
    if (eof()) err("unterminated attribute value");
    ++pos_;
    return out;
  }

  Element parse_element(int depth) {
    if (depth > kMaxDepth) err("maximum element depth exceeded");
    // pos_ is at '<'
    Element el;
    el.span_begin = pos_;
    ++pos_;
    el.name = parse_name();
    for (;;) {
      bool had_space = !eof() && is_space(peek());
      skip_ws();
      if (eof()) err("unterminated start tag");
      if (peek() == '>') {
        ++pos_;
        break;
      }
      if (starts_with("/>")) {
        pos_ += 2;
        el.span_end = pos_;
        el.content_begin = el.content_end = pos_;
        return el;
      }
      if (!had_space) err("expected whitespace before attribute");
      Attr a;
      a.name = parse_name();
      skip_ws();
      if (eof() || peek() != '=') err("expected '=' after attribute name");
      ++pos_;
      skip_ws();
      a.value = parse_attr_value();
      for (const auto& prev : el.attrs)
        if (prev.name == a.name) err("duplicate attribute \"" + a.name + "\"");
      el.attrs.push_back(std::move(a));
    }
    // content
    el.content_begin = pos_;
    for (;;) {
      if (eof()) err("unterminated element \"" + el.name + "\"");
      char c = peek();
      if (c == '<') {
        if (starts_with("</")) {
          el.content_end = pos_;
          pos_ += 2;
          std::string name = parse_name();
          if (name != el.name)
            err("mismatched end tag \"" + name + "\" for \"" + el.name + "\"");
          skip_ws();
          if (eof() || peek() != '>') err("malformed end tag");
          ++pos_;
          el.span_end = pos_;
          return el;
        }
        if (starts_with("<!--")) {
          size_t end = in_.find("-->", pos_ + 4);
          if (end == std::string_view::npos) err("unterminated comment");
          pos_ = end + 3;
        } else if (starts_with("<![CDATA[")) {
          size_t end = in_.find("]]>", pos_ + 9);
          if (end == std::string_view::npos) err("unterminated CDATA section");
          el.text.append(in_.substr(pos_ + 9, end - pos_ - 9));
          pos_ = end + 3;
        } else if (starts_with("<?")) {
          size_t end = in_.find("?>", pos_ + 2);
          if (end == std::string_view::npos) err("unterminated processing instruction");
          pos_ = end + 2;
        } else if (starts_with("<!")) {
          err("unsupported markup declaration");
        } else {
          el.children.push_back(parse_element(depth + 1));
        }
      } else if (c == '&') {
        parse_entity(el.text);
      } else {
        el.text.push_back(c);
        ++pos_;
      }
    }
  }

  static constexpr int kMaxDepth = 200;

  std::string_view in_;
  size_t pos_ = 0;
};

}  // namespace detail

// Parses a complete document and returns its root element.
// Throws FedError(Err::ParseError) on any malformation.
inline Element parse_document(std::string_view bytes) {
  return detail::Parser(bytes).parse_document();
}

inline bool is_well_formed(std::string_view bytes) {
  try {
    parse_document(bytes);
    return true;
  } catch (const FedError&) {
    return false;
  }
}

inline bool is_ws_only(std::string_view s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
  return true;
}

}  // namespace fedgate::xml

#include "vf/xml.hpp"

#include <algorithm>
#include <cctype>

#include "vf/variant.hpp"  // vf::Error

namespace vf {

const XmlNode* XmlNode::child(const std::string& child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::optional<std::string> XmlNode::attribute(const std::string& attr_name) const {
  for (const auto& [k, v] : attributes) {
    if (k == attr_name) return v;
  }
  return std::nullopt;
}

bool XmlNode::serialized_text_contains(const std::string& needle) const {
  auto contains = [&](const std::string& hay) {
    auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end(),
                          [](char a, char b) { return ::tolower(a) == ::tolower(b); });
    return it != hay.end();
  };
  if (contains(text)) return true;
  for (const auto& [k, v] : attributes) {
    if (contains(k) || contains(v)) return true;
  }
  for (const auto& c : children) {
    if (c.serialized_text_contains(needle)) return true;
  }
  return false;
}

namespace {

class Parser {
 public:
  Parser(const std::string& src, const std::string& origin)
      : src_(src), origin_(origin) {}

  XmlNode parse_document() {
    skip_misc();
    if (eof()) fail("document has no root element");
    XmlNode root = parse_element();
    skip_misc();
    if (!eof()) fail("trailing content after root element");
    return root;
  }

 private:
  const std::string& src_;
  const std::string& origin_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  bool starts_with(const char* s) const {
    return src_.compare(pos_, std::char_traits<char>::length(s), s) == 0;
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  // whitespace, comments, processing instructions, doctype
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        skip_until("-->");
      } else if (starts_with("<?")) {
        skip_until("?>");
      } else if (starts_with("<!")) {
        skip_until(">");
      } else {
        return;
      }
    }
  }

  void skip_until(const char* terminator) {
    const std::size_t found = src_.find(terminator, pos_);
    if (found == std::string::npos) fail(std::string("unterminated '") + terminator + "'");
    while (pos_ < found + std::char_traits<char>::length(terminator)) advance();
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.' || c == ':') {
        advance();
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a name");
    return src_.substr(start, pos_ - start);
  }

  std::string decode_entities(const std::string& raw) const {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      const std::size_t semi = raw.find(';', i);
      const std::string ent = semi == std::string::npos ? "" : raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") {
        out += '&';
      } else if (ent == "lt") {
        out += '<';
      } else if (ent == "gt") {
        out += '>';
      } else if (ent == "quot") {
        out += '"';
      } else if (ent == "apos") {
        out += '\'';
      } else {
        out += raw[i];
        continue;
      }
      i = semi;
    }
    return out;
  }

  std::string parse_attr_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
    const char quote = advance();
    std::string raw;
    while (!eof() && peek() != quote) raw += advance();
    if (eof()) fail("unterminated attribute value");
    advance();
    return decode_entities(raw);
  }

  XmlNode parse_element() {
    expect('<');
    XmlNode node;
    node.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag <" + node.name + ">");
      if (peek() == '/') {
        advance();
        expect('>');
        return node;  // self-closing
      }
      if (peek() == '>') {
        advance();
        break;
      }
      std::string key = parse_name();
      skip_ws();
      expect('=');
      skip_ws();
      node.attributes.emplace_back(std::move(key), parse_attr_value());
    }
    // content
    std::string raw_text;
    for (;;) {
      if (eof()) fail("unterminated element <" + node.name + ">");
      if (peek() == '<') {
        if (starts_with("</")) {
          advance();
          advance();
          const std::string closing = parse_name();
          if (closing != node.name) {
            fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
          }
          skip_ws();
          expect('>');
          node.text = decode_entities(trim(raw_text));
          return node;
        }
        if (starts_with("<!--")) {
          skip_until("-->");
          continue;
        }
        if (starts_with("<?")) {
          skip_until("?>");
          continue;
        }
        node.children.push_back(parse_element());
        continue;
      }
      raw_text += advance();
    }
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }
};

}  // namespace

XmlNode parse_xml(const std::string& source, const std::string& origin) {
  Parser parser(source, origin);
  return parser.parse_document();
}

}  // namespace vf

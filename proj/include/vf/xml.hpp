#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vf {

// Minimal XML document node, sufficient for the PNML subset: elements,
// attributes, character data, comments, self-closing tags, the five
// predefined entities. No namespaces, DTDs, or CDATA.
struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<XmlNode> children;
  std::string text;  // concatenated character data directly inside this element

  const XmlNode* child(const std::string& child_name) const;
  std::optional<std::string> attribute(const std::string& attr_name) const;
  bool serialized_text_contains(const std::string& needle) const;
};

// Parses a document and returns its root element. Throws vf::Error with
// origin:line on malformed input.
XmlNode parse_xml(const std::string& source, const std::string& origin);

}  // namespace vf

#include "vf/variant.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace vf {

void validate(const Variant& v) {
  if (v.events.empty()) throw Error("variant must contain at least one event");
  for (const auto& e : v.events) {
    if (e.empty()) throw Error("variant contains an empty event label");
    for (unsigned char c : e) {
      if (std::isspace(c)) {
        throw Error("event label '" + e + "' contains whitespace");
      }
    }
  }
}

VariantStats variant_stats(const UniqueVariantLog& vs) {
  if (vs.empty()) throw Error("variant_stats: empty variant set");
  VariantStats st;
  st.count = vs.size();
  std::size_t total = 0;
  std::set<std::string> alpha;
  for (const auto& v : vs) {
    st.max_length = std::max(st.max_length, v.length());
    total += v.length();
    alpha.insert(v.events.begin(), v.events.end());
  }
  st.alphabet_size = alpha.size();
  st.mean_length = static_cast<double>(total) / static_cast<double>(st.count);
  return st;
}

std::set<std::string> alphabet_of(const UniqueVariantLog& vs) {
  std::set<std::string> alpha;
  for (const auto& v : vs) alpha.insert(v.events.begin(), v.events.end());
  return alpha;
}

TokenCodec make_codec(const std::set<std::string>& alphabet, int max_len) {
  if (max_len < 1) throw Error("codec max_len must be >= 1");
  TokenCodec codec;
  codec.max_len = max_len;
  codec.id_to_label = {"<pad>", "<eos>"};
  for (const auto& label : alphabet) {
    codec.label_to_id[label] = static_cast<int>(codec.id_to_label.size());
    codec.id_to_label.push_back(label);
  }
  return codec;
}

TokenCodec make_codec(const UniqueVariantLog& training_log) {
  const auto st = variant_stats(training_log);
  return make_codec(alphabet_of(training_log), static_cast<int>(st.max_length));
}

std::vector<int> encode(const TokenCodec& codec, const Variant& v) {
  if (v.length() > static_cast<std::size_t>(codec.max_len)) {
    throw Error("variant of length " + std::to_string(v.length()) +
                " exceeds codec max_len " + std::to_string(codec.max_len));
  }
  std::vector<int> out;
  out.reserve(codec.width());
  for (const auto& e : v.events) {
    auto it = codec.label_to_id.find(e);
    if (it == codec.label_to_id.end()) throw Error("unknown label " + e);
    out.push_back(it->second);
  }
  out.push_back(TokenCodec::eos_id);
  out.resize(codec.width(), TokenCodec::pad_id);
  return out;
}

std::optional<Variant> decode(const TokenCodec& codec, std::span<const int> tokens) {
  Variant v;
  for (int id : tokens) {
    if (id == TokenCodec::eos_id) {
      if (v.events.empty()) return std::nullopt;  // empty prefix
      return v;
    }
    if (id == TokenCodec::pad_id) return std::nullopt;  // PAD before EOS
    if (id < 0 || id >= codec.vocab_size()) return std::nullopt;
    v.events.push_back(codec.id_to_label[static_cast<std::size_t>(id)]);
  }
  return std::nullopt;  // no EOS
}

SetOps set_ops(const UniqueVariantLog& xs, const UniqueVariantLog& ys) {
  SetOps ops;
  auto xi = xs.begin();
  auto yi = ys.begin();
  while (xi != xs.end() && yi != ys.end()) {
    if (*xi < *yi) {
      ++ops.only_left;
      ++xi;
    } else if (*yi < *xi) {
      ++ops.only_right;
      ++yi;
    } else {
      ++ops.common;
      ++xi;
      ++yi;
    }
  }
  ops.only_left += static_cast<std::size_t>(std::distance(xi, xs.end()));
  ops.only_right += static_cast<std::size_t>(std::distance(yi, ys.end()));
  return ops;
}

UniqueVariantLog read_variants_text(const std::string& text, const std::string& origin,
                                    std::vector<std::string>* warnings) {
  UniqueVariantLog vs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    std::string line = text.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : text.size();
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (line.empty()) {
      if (pos < text.size()) {
        throw Error(origin + ":" + std::to_string(line_no) + ": empty line mid-file");
      }
      continue;  // trailing newline
    }
    Variant v;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t sp = line.find(' ', start);
      std::string tok = line.substr(start, sp == std::string::npos ? std::string::npos
                                                                   : sp - start);
      if (tok.empty()) {
        throw Error(origin + ":" + std::to_string(line_no) +
                    ": malformed line (empty event label)");
      }
      v.events.push_back(std::move(tok));
      if (sp == std::string::npos) break;
      start = sp + 1;
    }
    validate(v);
    if (!vs.insert(std::move(v)).second && warnings != nullptr) {
      warnings->push_back(origin + ":" + std::to_string(line_no) + ": duplicate variant");
    }
  }
  return vs;
}

UniqueVariantLog read_variants(const std::filesystem::path& path,
                               std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_variants_text(buf.str(), path.string(), warnings);
}

std::string variants_to_text(const UniqueVariantLog& vs) {
  std::string out;
  for (const auto& v : vs) {
    for (std::size_t i = 0; i < v.events.size(); ++i) {
      if (i > 0) out += ' ';
      out += v.events[i];
    }
    out += '\n';
  }
  return out;
}

void write_variants(const std::filesystem::path& path, const UniqueVariantLog& vs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << variants_to_text(vs);
  if (!out) throw Error("write failure on " + path.string());
}

}  // namespace vf

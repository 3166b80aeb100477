#include "aria/core/types.hpp"

#include <array>
#include <cctype>
#include <stdexcept>

namespace aria {
namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes one code point at `i`, advancing it. Invalid bytes decode as
// themselves so malformed input still round-trips.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  auto need = [&](std::size_t n) { return i + n <= s.size(); };
  auto cont = [&](std::size_t k) {
    return (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && need(2) && cont(1)) {
    char32_t cp = ((b0 & 0x1F) << 6) | (s[i + 1] & 0x3F);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && need(3) && cont(1) && cont(2)) {
    char32_t cp = ((b0 & 0x0F) << 12) | ((s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && need(4) && cont(1) && cont(2) && cont(3)) {
    char32_t cp = ((b0 & 0x07) << 18) | ((s[i + 1] & 0x3F) << 12) |
                  ((s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F);
    i += 4;
    return cp;
  }
  ++i;
  return b0;
}

char32_t fold(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                 // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0xA0 || cp == 0x2009 || cp == 0x202F || cp == 0x3000;
}

}  // namespace

std::string canonicalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = next_code_point(text, i);
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    append_utf8(out, fold(cp));
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

void InformalStatement::validate() const {
  if (trim(text).empty()) throw std::invalid_argument("informal statement '" + id + "' is empty");
}

Concept Concept::make(std::string_view name, std::string_view gloss) {
  Concept c{canonicalize(name), trim(gloss)};
  if (c.name.empty()) throw std::invalid_argument("concept name is empty");
  return c;
}

NodeId NodeId::parse(std::string_view text) {
  if (text.size() < 2 || text[0] != 'n') throw std::invalid_argument("bad node id");
  std::uint32_t v = 0;
  for (char ch : text.substr(1)) {
    if (ch < '0' || ch > '9') throw std::invalid_argument("bad node id");
    v = v * 10 + static_cast<std::uint32_t>(ch - '0');
  }
  return NodeId{v};
}

namespace {
constexpr std::array<std::string_view, 5> kStatusNames = {
    "Pending", "Grounded", "NeedsSynthesis", "Synthesized", "Failed"};
}

std::string_view to_string(NodeStatus status) {
  return kStatusNames[static_cast<std::size_t>(status)];
}

NodeStatus node_status_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i)
    if (kStatusNames[i] == text) return static_cast<NodeStatus>(i);
  throw std::invalid_argument("unknown node status '" + std::string(text) + "'");
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Info: return "info";
  }
  return "error";
}

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Definition: return "Definition";
    case ArtifactKind::Instance: return "Instance";
    case ArtifactKind::Theorem: return "Theorem";
  }
  return "Definition";
}

std::string_view to_string(CompileStatus status) {
  switch (status) {
    case CompileStatus::Unchecked: return "Unchecked";
    case CompileStatus::Ok: return "Ok";
    case CompileStatus::Error: return "Error";
  }
  return "Unchecked";
}

}  // namespace aria

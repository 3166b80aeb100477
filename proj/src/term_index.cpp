#include "aria/term_index.hpp"

#include <cctype>
#include <fstream>

#include "aria/errors.hpp"
#include "aria/gateway.hpp"

namespace aria {

using nlohmann::json;

TermInfo term_from_json(const json& j) {
  TermInfo t;
  const auto& name = j.at("name");
  if (name.is_array()) {
    for (const auto& part : name) {
      if (!t.name.empty()) t.name += '.';
      t.name += part.get<std::string>();
    }
  } else {
    t.name = name.get<std::string>();
  }
  t.kind = j.value("kind", "");
  t.type_sig = j.value("type", "");
  t.value = j.value("value", "");
  t.informal_name = j.value("informal_name", "");
  t.informal_description = j.value("informal_description", "");
  t.unknown = j.value("unknown", false);
  return t;
}

json to_json(const TermInfo& t) {
  json parts = json::array();
  std::size_t start = 0;
  while (true) {
    auto dot = t.name.find('.', start);
    parts.push_back(t.name.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json j{{"name", parts},
         {"kind", t.kind},
         {"type", t.type_sig},
         {"value", t.value},
         {"informal_name", t.informal_name},
         {"informal_description", t.informal_description}};
  if (t.unknown) j["unknown"] = true;
  return j;
}

std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TermIndex::TermIndex(std::vector<TermInfo> records) : records_(std::move(records)) {
  json all = json::array();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    by_name_.emplace(records_[i].name, i);
    all.push_back(to_json(records_[i]));
  }
  digest_ = sha256_hex(canonical_json(all));
}

TermIndex TermIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IndexUnavailable("cannot read term index " + path.string());
  std::vector<TermInfo> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(term_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IndexUnavailable(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return TermIndex(std::move(records));
}

const TermInfo* TermIndex::find(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &records_[it->second];
}

}  // namespace aria

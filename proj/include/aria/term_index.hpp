#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace aria {

// One informalized library declaration.
struct TermInfo {
  std::string name;  // dotted, fully qualified
  std::string kind;
  std::string type_sig;
  std::string value;
  std::string informal_name;
  std::string informal_description;
  bool unknown = false;  // set for names absent from the index

  friend bool operator==(const TermInfo&, const TermInfo&) = default;
};

// Index records use the keys name, kind, type, value, informal_name and
// informal_description. `name` is either a dotted string or a list of
// components (["Ideal", "span"]).
TermInfo term_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TermInfo& t);

// Lowercased alphanumeric tokens.
std::vector<std::string> lexical_tokens(std::string_view text);

// Exact-name lookup table over a line-delimited record file.
class TermIndex {
 public:
  TermIndex() = default;
  explicit TermIndex(std::vector<TermInfo> records);

  // Throws IndexUnavailable when the file cannot be read or parsed.
  static TermIndex load(const std::filesystem::path& path);

  const TermInfo* find(std::string_view name) const;
  const std::vector<TermInfo>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  // Digest of the canonical record list, recorded in transcript headers.
  const std::string& digest() const { return digest_; }

 private:
  std::vector<TermInfo> records_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::string digest_;
};

}  // namespace aria

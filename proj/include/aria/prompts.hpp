#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace aria {

// Prompt templates are data: every template can be replaced by a file
// `<name>.txt` in a prompts directory. Placeholders are written `{{key}}`.
class Prompts {
 public:
  Prompts();  // built-in defaults

  // Overrides any template that has a matching file in `dir`.
  void load_overrides(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  void set(std::string name, std::string text);

  std::string render(std::string_view name, const std::map<std::string, std::string>& values) const;

  static const Prompts& defaults();

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

// Replaces each `{{key}}` in `tmpl`. Unknown keys are left as written.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace aria

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace veribtot {

/// Named prompt templates with {{placeholder}} substitution. The compiled-in
/// defaults can be overridden per template by dropping a `<name>.txt` file
/// into a directory; editing templates never requires a rebuild.
class PromptLibrary {
public:
  /// The compiled-in template set.
  static PromptLibrary builtin();

  /// builtin() with every `<name>.txt` found in `dir` layered on top.
  static PromptLibrary from_dir(const std::filesystem::path& dir);

  bool has(std::string_view name) const;
  const std::string& raw(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Substitutes {{key}} markers. Throws ValidationError when the template
  /// is unknown or a placeholder has no value.
  std::string render(std::string_view name,
                     const std::map<std::string, std::string>& values) const;

private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace veribtot

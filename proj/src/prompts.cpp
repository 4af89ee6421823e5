#include "veribtot/prompts.hpp"

#include <fstream>
#include <sstream>

#include "veribtot/errors.hpp"

namespace veribtot {

namespace detail {
// Defined in prompts_builtin.cpp.
const std::map<std::string, std::string, std::less<>>& builtin_templates();
}  // namespace detail

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.templates_ = detail::builtin_templates();
  return lib;
}

PromptLibrary PromptLibrary::from_dir(const std::filesystem::path& dir) {
  PromptLibrary lib = builtin();
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("prompt directory does not exist: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") {
      continue;
    }
    std::ifstream in(entry.path());
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.templates_[entry.path().stem().string()] = buf.str();
  }
  return lib;
}

bool PromptLibrary::has(std::string_view name) const {
  return templates_.find(name) != templates_.end();
}

const std::string& PromptLibrary::raw(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw ValidationError("unknown prompt template: '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::string> PromptLibrary::names() const {
  std::vector<std::string> out;
  out.reserve(templates_.size());
  for (const auto& [name, text] : templates_) {
    out.push_back(name);
  }
  return out;
}

std::string PromptLibrary::render(std::string_view name,
                                  const std::map<std::string, std::string>& values) const {
  const std::string& text = raw(name);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    auto open = text.find("{{", i);
    if (open == std::string::npos) {
      out.append(text, i, std::string::npos);
      break;
    }
    out.append(text, i, open - i);
    auto close = text.find("}}", open + 2);
    if (close == std::string::npos) {
      throw ValidationError("unterminated placeholder in template '" + std::string(name) + "'");
    }
    std::string key = text.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) {
      throw ValidationError("template '" + std::string(name) + "' needs a value for {{" + key +
                            "}}");
    }
    out += it->second;
    i = close + 2;
  }
  return out;
}

}  // namespace veribtot

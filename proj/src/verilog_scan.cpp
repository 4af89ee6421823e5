#include "veribtot/verilog_scan.hpp"

#include <cctype>

namespace veribtot {
namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Removes // and /* */ comments plus "..." literals so their contents cannot
// fake a module header.
std::string strip_noise(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  std::size_t i = 0;
  while (i < source.size()) {
    char c = source[i];
    if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
      while (i < source.size() && source[i] != '\n') {
        ++i;
      }
    } else if (c == '/' && i + 1 < source.size() && source[i + 1] == '*') {
      i += 2;
      while (i + 1 < source.size() && !(source[i] == '*' && source[i + 1] == '/')) {
        ++i;
      }
      i = (i + 1 < source.size()) ? i + 2 : source.size();
      out.push_back(' ');
    } else if (c == '"') {
      ++i;
      while (i < source.size() && source[i] != '"') {
        if (source[i] == '\\' && i + 1 < source.size()) {
          ++i;
        }
        ++i;
      }
      if (i < source.size()) {
        ++i;
      }
      out.push_back(' ');
    } else {
      out.push_back(c);
      ++i;
    }
  }
  return out;
}

std::vector<std::string> identifier_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (ident_start(text[i])) {
      std::size_t start = i;
      while (i < text.size() && ident_char(text[i])) {
        ++i;
      }
      tokens.emplace_back(text.substr(start, i - start));
    } else {
      ++i;
    }
  }
  return tokens;
}

}  // namespace

bool is_verilog_identifier(std::string_view name) {
  if (name.empty() || !ident_start(name[0])) {
    return false;
  }
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!ident_char(name[i])) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> module_names(std::string_view source) {
  std::vector<std::string> names;
  auto tokens = identifier_tokens(strip_noise(source));
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i] == "module" || tokens[i] == "macromodule") {
      names.push_back(tokens[i + 1]);
    }
  }
  return names;
}

std::size_t count_module_headers(std::string_view source) {
  return module_names(source).size();
}

bool instantiates(std::string_view source, std::string_view module_name) {
  auto tokens = identifier_tokens(strip_noise(source));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != module_name) {
      continue;
    }
    bool is_header = i > 0 && (tokens[i - 1] == "module" || tokens[i - 1] == "macromodule");
    if (!is_header) {
      return true;
    }
  }
  return false;
}

}  // namespace veribtot

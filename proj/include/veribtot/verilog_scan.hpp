#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace veribtot {

// Lightweight lexical scans over Verilog source. These are deliberately not a
// parser: they strip comments and string literals, then look at identifier
// tokens. Good enough to check module headers and spot instantiations.

/// True if `name` is a plain Verilog identifier: [A-Za-z_][A-Za-z0-9_$]*.
bool is_verilog_identifier(std::string_view name);

/// Names of modules declared in `source`, in declaration order.
std::vector<std::string> module_names(std::string_view source);

/// Number of `module` headers in `source`.
std::size_t count_module_headers(std::string_view source);

/// True if `source` mentions `module_name` as a token anywhere other than its
/// own `module` header. Catches instantiations without elaborating.
bool instantiates(std::string_view source, std::string_view module_name);

}  // namespace veribtot

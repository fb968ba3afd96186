#pragma once

#include <string>

namespace dlo {

/// Read a JSON config file and verify its "schema" field. Returns the raw
/// text; modules parse their own sections. Throws ConfigError on mismatch.
std::string load_config_text(const std::string& path, const std::string& expected_schema);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dlo

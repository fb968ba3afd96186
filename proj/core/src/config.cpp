#include "dlo/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dlo/errors.hpp"

namespace dlo {

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw IoError("short write to '" + path + "'");
}

std::string load_config_text(const std::string& path, const std::string& expected_schema) {
    std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
        throw ConfigError("config '" + path + "' lacks a string 'schema' field");
    if (j["schema"].get<std::string>() != expected_schema)
        throw ConfigError("config '" + path + "' has schema '" +
                          j["schema"].get<std::string>() + "', expected '" + expected_schema +
                          "'");
    return text;
}

}  // namespace dlo

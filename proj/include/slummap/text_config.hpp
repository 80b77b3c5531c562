#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slummap {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plain-text `key = value` document with optional `[section]` headers.
/// `#` starts a comment line. Keys before the first section live in the
/// unnamed section "". Insertion order is kept for echoing.
class KeyValueDocument {
public:
    static KeyValueDocument parse(const std::string& text, const std::string& origin = "<text>");
    static KeyValueDocument parse_file(const std::filesystem::path& path);

    const std::string* find(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;
    void set(const std::string& section, const std::string& key, std::string value);

    /// Sections in first-seen order.
    const std::vector<std::string>& sections() const noexcept { return section_order_; }
    /// Entries of one section in insertion order.
    std::vector<std::pair<std::string, std::string>> entries(const std::string& section) const;

    std::string to_string() const;

private:
    std::vector<std::string> section_order_;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;
};

std::string trim(const std::string& text);
/// Comma-separated list, entries trimmed, empty entries dropped.
std::vector<std::string> split_list(const std::string& text);
std::string join_list(const std::vector<std::string>& items, const std::string& separator = ",");

}  // namespace slummap

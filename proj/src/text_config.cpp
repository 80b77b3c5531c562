#include "slummap/text_config.hpp"

#include "slummap/raster.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace slummap {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items, const std::string& separator) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += separator;
        out += items[i];
    }
    return out;
}

KeyValueDocument KeyValueDocument::parse(const std::string& text, const std::string& origin) {
    KeyValueDocument doc;
    std::string section;
    std::stringstream stream(text);
    std::string raw;
    std::size_t line_number = 0;
    while (std::getline(stream, raw)) {
        ++line_number;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = origin + ":" + std::to_string(line_number);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            if (!doc.has_section(section)) {
                doc.section_order_.push_back(section);
                doc.sections_[section];
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (doc.find(section, key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        doc.set(section, key, trim(line.substr(eq + 1)));
    }
    return doc;
}

KeyValueDocument KeyValueDocument::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

const std::string* KeyValueDocument::find(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (const auto& [k, v] : it->second) {
        if (k == key) return &v;
    }
    return nullptr;
}

bool KeyValueDocument::has_section(const std::string& section) const {
    return sections_.count(section) != 0;
}

void KeyValueDocument::set(const std::string& section, const std::string& key, std::string value) {
    if (!has_section(section)) section_order_.push_back(section);
    auto& entries = sections_[section];
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries.emplace_back(key, std::move(value));
}

std::vector<std::pair<std::string, std::string>> KeyValueDocument::entries(const std::string& section) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return {};
    return it->second;
}

std::string KeyValueDocument::to_string() const {
    std::ostringstream out;
    // Unnamed-section keys have no header line, so they must come first.
    std::vector<std::string> order;
    if (has_section("")) order.push_back("");
    for (const auto& section : section_order_) {
        if (!section.empty()) order.push_back(section);
    }
    bool first = true;
    for (const auto& section : order) {
        const auto& entries = sections_.at(section);
        if (!section.empty()) {
            if (!first) out << '\n';
            out << '[' << section << "]\n";
        }
        for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
        first = false;
    }
    return out.str();
}

}  // namespace slummap

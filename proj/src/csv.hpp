#pragma once

#include <string>
#include <vector>

#include "sensy/error.hpp"

namespace sensy::csv {

// RFC-4180 record parser: quoted fields may contain commas, quotes and
// newlines; blank lines are skipped.
inline std::vector<std::vector<std::string>> parse_records(const std::string& s) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) {
            rows.push_back(std::move(record));
        }
        record.clear();
    };

    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < s.size() && s[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field += c;
                ++i;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
            ++i;
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\r') {
            end_record();
            i += (i + 1 < s.size() && s[i + 1] == '\n') ? 2 : 1;
        } else if (c == '\n') {
            end_record();
            ++i;
        } else {
            field += c;
            field_started = true;
            ++i;
        }
    }
    if (in_quotes) {
        throw ParseError("csv: unterminated quoted field");
    }
    if (field_started || !field.empty() || !record.empty()) {
        end_record();
    }
    return rows;
}

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace sensy::csv

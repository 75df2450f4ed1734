#include "sensy/text.hpp"

#include <cctype>

namespace sensy {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

} // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    while (b < s.size() && is_space(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) break;

        std::size_t b = start;
        std::size_t e = i;
        while (b < e && is_punct(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && is_punct(static_cast<unsigned char>(text[e - 1]))) --e;
        if (e > b) {
            tokens.push_back(to_lower(text.substr(b, e - b)));
        }
    }
    return tokens;
}

int count_words(std::string_view text) {
    int n = 0;
    bool in_word = false;
    for (char ch : text) {
        bool ws = is_space(static_cast<unsigned char>(ch));
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

} // namespace sensy

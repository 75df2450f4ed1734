#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sensy {

// Whitespace-split tokenizer: strips leading/trailing punctuation from each
// token, lowercases (ASCII), drops tokens that end up empty. Internal
// punctuation such as the apostrophe in "don't" is kept.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);

// Removes leading and trailing whitespace.
std::string_view trim(std::string_view s);

// Number of maximal non-whitespace runs.
int count_words(std::string_view text);

} // namespace sensy

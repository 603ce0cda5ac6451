#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cdse::metrics {

// Lowercase, punctuation removed, split on whitespace.
std::vector<std::string> normalize_words(std::string_view text);

// Levenshtein distance between word sequences.
std::size_t edit_distance(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

// (S + D + I) / |reference|. Throws kEmptyReference.
double wer(std::string_view reference, std::string_view hypothesis);

}  // namespace cdse::metrics

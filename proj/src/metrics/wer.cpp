#include "cdse/metrics/wer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cdse/error.hpp"

namespace cdse::metrics {

std::vector<std::string> normalize_words(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (const char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned.push_back(std::isspace(u) ? ' ' : static_cast<char>(std::tolower(u)));
  }
  std::istringstream in(cleaned);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

std::size_t edit_distance(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  std::vector<std::size_t> prev(hypothesis.size() + 1), cur(hypothesis.size() + 1);
  for (std::size_t j = 0; j <= hypothesis.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= reference.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hypothesis.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hypothesis.size()];
}

double wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = normalize_words(reference);
  require(!ref.empty(), ErrorCode::kEmptyReference, "reference transcript is empty after normalization");
  return static_cast<double>(edit_distance(ref, normalize_words(hypothesis))) / static_cast<double>(ref.size());
}

}  // namespace cdse::metrics

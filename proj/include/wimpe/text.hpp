#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wimpe::text {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);

// True for a line that is only a markdown code fence, e.g. "```" or "```json".
bool is_code_fence(std::string_view line);

// Removes one pair of surrounding markdown code fences, if present.
std::string strip_code_fences(std::string_view s);

// Lowercased alphanumeric words; everything else separates. Used by the mock
// judge for crude overlap heuristics.
std::vector<std::string> words(std::string_view s);

// Parses the whole (trimmed) string as a finite decimal number.
std::optional<double> parse_number(std::string_view s);

// Shortest round-trip decimal form.
std::string format_number(double v);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Last section of a rendered prompt that starts with a line equal to
// `header`, up to the next line starting with "### " or the end.
std::optional<std::string> prompt_section(std::string_view prompt, std::string_view header);

}  // namespace wimpe::text

namespace wimpe::sections {
// Headers of the input blocks appended to every shipped template.
inline constexpr std::string_view kQuestion = "### Question";
inline constexpr std::string_view kReference = "### Reference Answer";
inline constexpr std::string_view kPoints = "### Scoring Points";
inline constexpr std::string_view kGenerated = "### Generated Answer";
inline constexpr std::string_view kResponses = "### Candidate Responses";
inline constexpr std::string_view kBasePrompt = "### Base Prompt";
inline constexpr std::string_view kOriginalPoints = "### Unexpected Scoring Points";
inline constexpr std::string_view kCorrectedPoints = "### Corrected Scoring Points";
inline constexpr std::string_view kExplanation = "### Explanation";
}  // namespace wimpe::sections

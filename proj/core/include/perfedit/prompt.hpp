#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfedit/types.hpp"

namespace perfedit {

enum class PromptStyle {
  Instruction,
  FewShot,
  ChainOfThought,
  Retrieval,
  PerfConditioned,
};

std::string to_string(PromptStyle style);
PromptStyle prompt_style_from_string(const std::string& s);

struct PromptResult {
  std::string text;
  std::size_t token_estimate = 0;  // rough: ceil(bytes / 4)
  std::string template_version;
};

/// Assembles a prompt from versioned templates; the query program is always
/// the final element. FewShot/Retrieval need at least one example pair,
/// PerfConditioned needs a tag; violations throw std::invalid_argument.
PromptResult build_prompt(PromptStyle style,
                          std::span<const ProgramPair> examples,
                          std::string_view query,
                          std::optional<int> tag = std::nullopt);

/// Per problem, ranks solutions by runtime ascending and buckets them into
/// deciles: the fastest decile tags 10, the slowest 1. Equal runtimes share
/// a rank (1 + number of strictly faster solutions), so they share a tag.
/// Input: problem_id -> [(solution_id, runtime)]. Every problem needs at
/// least one solution; solution ids must be globally unique.
std::map<std::string, int> assign_perf_tags(
    const std::map<std::string,
                   std::vector<std::pair<std::string, double>>>& solutions);

}  // namespace perfedit

#include "perfedit/prompt.hpp"

#include <algorithm>
#include <cmath>

namespace perfedit {

namespace {

constexpr const char* kTemplateVersion = "v1";

void append_example_pairs(std::string& text,
                          std::span<const ProgramPair> examples) {
  for (const auto& pair : examples) {
    text += "### slower version:\n\n";
    text += pair.src;
    text += "\n\n### optimized version of the same code:\n\n";
    text += pair.tgt;
    text += "\n\n";
  }
}

}  // namespace

std::string to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::Instruction:
      return "instruction";
    case PromptStyle::FewShot:
      return "few_shot";
    case PromptStyle::ChainOfThought:
      return "chain_of_thought";
    case PromptStyle::Retrieval:
      return "retrieval";
    case PromptStyle::PerfConditioned:
      return "perf_conditioned";
  }
  throw std::logic_error("unreachable PromptStyle");
}

PromptStyle prompt_style_from_string(const std::string& s) {
  if (s == "instruction") return PromptStyle::Instruction;
  if (s == "few_shot") return PromptStyle::FewShot;
  if (s == "chain_of_thought") return PromptStyle::ChainOfThought;
  if (s == "retrieval") return PromptStyle::Retrieval;
  if (s == "perf_conditioned") return PromptStyle::PerfConditioned;
  throw std::invalid_argument("unknown prompt style: " + s);
}

PromptResult build_prompt(PromptStyle style,
                          std::span<const ProgramPair> examples,
                          std::string_view query, std::optional<int> tag) {
  std::string text;
  switch (style) {
    case PromptStyle::Instruction:
      text += "Give a potential optimization for the following program, "
              "keeping its behavior identical.\n\n### Program:\n\n";
      text += query;
      text += "\n\n### Optimized version of the program:\n";
      break;

    case PromptStyle::FewShot:
    case PromptStyle::Retrieval:
      if (examples.empty()) {
        throw std::invalid_argument(to_string(style) +
                                    " prompt requires at least one example");
      }
      append_example_pairs(text, examples);
      text += "### slower version:\n\n";
      text += query;
      text += "\n\n### optimized version of the same code:\n";
      break;

    case PromptStyle::ChainOfThought:
      if (!examples.empty()) {
        append_example_pairs(text, examples);
      }
      text += "### slower version:\n\n";
      text += query;
      text += "\n\nThink about how the program above can be optimized, "
              "then write the optimized version.\n\n### reasoning and "
              "optimized version:\n";
      break;

    case PromptStyle::PerfConditioned: {
      if (!tag) {
        throw std::invalid_argument(
            "perf_conditioned prompt requires a performance tag");
      }
      if (*tag < 1 || *tag > 10) {
        throw std::invalid_argument("performance tag must be in 1..10");
      }
      text += "### slower version:\n\n";
      text += query;
      text += "\n\n### optimized version of the same code, score ";
      text += std::to_string(*tag);
      text += "/10:\n";
      break;
    }
  }

  PromptResult result;
  result.text = std::move(text);
  result.token_estimate = (result.text.size() + 3) / 4;
  result.template_version = kTemplateVersion;
  return result;
}

std::map<std::string, int> assign_perf_tags(
    const std::map<std::string,
                   std::vector<std::pair<std::string, double>>>& solutions) {
  std::map<std::string, int> tags;
  for (const auto& [problem, entries] : solutions) {
    if (entries.empty()) {
      throw std::invalid_argument("problem " + problem + " has no solutions");
    }
    const auto m = static_cast<long>(entries.size());
    for (const auto& [solution_id, runtime] : entries) {
      long faster = 0;
      for (const auto& [other_id, other_runtime] : entries) {
        if (other_runtime < runtime) ++faster;
      }
      const long rank = 1 + faster;  // shared by equal runtimes
      const int tag = static_cast<int>(10 - (10 * (rank - 1)) / m);
      if (!tags.emplace(solution_id, tag).second) {
        throw std::invalid_argument("duplicate solution id: " + solution_id);
      }
    }
  }
  return tags;
}

}  // namespace perfedit

#include "perfedit/selfplay.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <thread>

#include "perfedit/hash.hpp"

namespace perfedit {

namespace {

// Length-prefixed encoding so that list boundaries cannot be confused with
// output bytes.
std::string encode_outputs(
    const std::vector<std::optional<std::string>>& outputs) {
  std::string blob;
  for (const auto& out : outputs) {
    if (!out) {
      blob += "F;";
    } else {
      blob += "O" + std::to_string(out->size()) + ":";
      blob += *out;
      blob += ";";
    }
  }
  return blob;
}

}  // namespace

bool OutputSignature::same_behavior(const OutputSignature& other) const {
  return hash == other.hash && inputs_digest == other.inputs_digest &&
         outputs == other.outputs;
}

std::string digest_inputs(std::span<const std::string> inputs) {
  std::string blob;
  for (const auto& input : inputs) {
    blob += std::to_string(input.size()) + ":";
    blob += input;
    blob += ";";
  }
  return sha256_hex(blob);
}

OutputSignature output_signature(const std::string& program_id,
                                 const std::string& source,
                                 std::span<const std::string> inputs,
                                 const SignatureOptions& options) {
  if (inputs.empty()) {
    throw std::invalid_argument("output_signature requires inputs");
  }
  OutputSignature sig;
  sig.program_id = program_id;
  sig.inputs_digest = digest_inputs(inputs);
  sig.outputs.resize(inputs.size());

  const auto workdir = std::filesystem::temp_directory_path() /
                       ("perfedit-sig-" + sha256_hex(source).substr(0, 12));
  auto compiled = compile(source, options.compile, workdir);
  if (compiled.ok()) {
    const auto run_one = [&](std::size_t i) {
      const RunResult run = run_process({compiled.value().path.string()},
                                        inputs[i], options.limits);
      if (run.success()) {
        sig.outputs[i] = normalize_output(run.out);
      }  // otherwise stays Fail
    };
    if (options.jobs <= 1 || inputs.size() <= 1) {
      for (std::size_t i = 0; i < inputs.size(); ++i) run_one(i);
    } else {
      std::atomic<std::size_t> next{0};
      const int jobs =
          std::min<int>(options.jobs, static_cast<int>(inputs.size()));
      std::vector<std::thread> workers;
      workers.reserve(jobs);
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= inputs.size()) return;
            run_one(i);
          }
        });
      }
      for (auto& t : workers) t.join();
    }
  }
  sig.hash = sha256_hex(encode_outputs(sig.outputs));
  return sig;
}

std::vector<EquivalenceClass> group_equivalence(
    std::span<const OutputSignature> signatures) {
  // Bucket by hash, then confirm with the full output list so a hash
  // collision cannot merge distinct behaviors.
  std::map<std::string, std::vector<const OutputSignature*>> by_hash;
  for (const auto& sig : signatures) {
    by_hash[sig.hash].push_back(&sig);
  }

  std::vector<EquivalenceClass> classes;
  for (auto& [hash, bucket] : by_hash) {
    std::vector<std::vector<const OutputSignature*>> confirmed;
    for (const auto* sig : bucket) {
      bool placed = false;
      for (auto& group : confirmed) {
        if (group.front()->outputs == sig->outputs &&
            group.front()->inputs_digest == sig->inputs_digest) {
          group.push_back(sig);
          placed = true;
          break;
        }
      }
      if (!placed) confirmed.push_back({sig});
    }
    for (auto& group : confirmed) {
      EquivalenceClass cls;
      for (const auto* sig : group) cls.member_ids.push_back(sig->program_id);
      std::sort(cls.member_ids.begin(), cls.member_ids.end());
      cls.representative = cls.member_ids.front();
      classes.push_back(std::move(cls));
    }
  }
  std::sort(classes.begin(), classes.end(),
            [](const EquivalenceClass& a, const EquivalenceClass& b) {
              return a.representative < b.representative;
            });
  for (std::size_t i = 0; i < classes.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "C%04zu", i);
    classes[i].class_id = id;
  }
  return classes;
}

std::vector<OutputSignature> novelty_filter(
    std::span<const OutputSignature> generated,
    std::span<const OutputSignature> known) {
  for (const auto& g : generated) {
    for (const auto& k : known) {
      if (g.inputs_digest != k.inputs_digest) {
        throw std::invalid_argument(
            "signature corpora were computed over different input sets");
      }
    }
  }
  std::vector<OutputSignature> novel;
  for (const auto& g : generated) {
    const bool seen = std::any_of(
        known.begin(), known.end(),
        [&](const OutputSignature& k) { return g.same_behavior(k); });
    if (!seen) novel.push_back(g);
  }
  return novel;
}

std::vector<ProgramPair> assemble_synthetic_pairs(
    std::span<const EquivalenceClass> classes,
    std::span<const SyntheticCandidate> candidates, double min_speedup,
    int max_per_class) {
  if (max_per_class < 0) {
    throw std::invalid_argument("max_per_class must be >= 0");
  }
  std::map<std::string, std::string> class_of;  // slow_id -> class_id
  for (const auto& cls : classes) {
    for (const auto& id : cls.member_ids) class_of[id] = cls.class_id;
  }

  std::map<std::string, std::vector<const SyntheticCandidate*>> per_class;
  for (const auto& c : candidates) {
    const auto it = class_of.find(c.slow_id);
    if (it == class_of.end()) {
      throw std::invalid_argument("candidate slow program " + c.slow_id +
                                  " is in no equivalence class");
    }
    if (c.slow_runtime.unit != c.fast_runtime.unit) {
      throw std::invalid_argument("mixed units in candidate " + c.slow_id +
                                  " -> " + c.fast_id);
    }
    const double speedup = c.slow_runtime.value / c.fast_runtime.value;
    if (speedup >= min_speedup) {
      per_class[it->second].push_back(&c);
    }
  }

  std::vector<ProgramPair> pairs;
  for (auto& [class_id, group] : per_class) {
    std::sort(group.begin(), group.end(),
              [](const SyntheticCandidate* a, const SyntheticCandidate* b) {
                const double sa = a->slow_runtime.value / a->fast_runtime.value;
                const double sb = b->slow_runtime.value / b->fast_runtime.value;
                if (sa != sb) return sa > sb;
                return std::tie(a->slow_id, a->fast_id) <
                       std::tie(b->slow_id, b->fast_id);
              });
    const std::size_t take =
        std::min(group.size(), static_cast<std::size_t>(max_per_class));
    for (std::size_t i = 0; i < take; ++i) {
      const auto& c = *group[i];
      ProgramPair pair;
      pair.problem_id = c.problem_id;
      pair.src_id = c.slow_id;
      pair.tgt_id = c.fast_id;
      pair.pair_id = c.problem_id + ":" + c.slow_id + ":" + c.fast_id;
      pair.src = c.slow_src;
      pair.tgt = c.fast_src;
      pair.src_runtime = c.slow_runtime;
      pair.tgt_runtime = c.fast_runtime;
      pair.relative_improvement =
          (c.slow_runtime.value - c.fast_runtime.value) / c.slow_runtime.value;
      pair.provenance = Provenance::SelfPlay;
      pair.class_id = class_id;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

void to_json(Json& j, const OutputSignature& sig) {
  Json outputs = Json::array();
  for (const auto& out : sig.outputs) {
    outputs.push_back(out ? Json(*out) : Json(nullptr));
  }
  j = Json{{"program_id", sig.program_id},
           {"outputs", outputs},
           {"inputs_digest", sig.inputs_digest},
           {"hash", sig.hash}};
}

void from_json(const Json& j, OutputSignature& sig) {
  sig.program_id = j.at("program_id").get<std::string>();
  sig.outputs.clear();
  for (const auto& out : j.at("outputs")) {
    if (out.is_null()) {
      sig.outputs.push_back(std::nullopt);
    } else {
      sig.outputs.push_back(out.get<std::string>());
    }
  }
  sig.inputs_digest = j.at("inputs_digest").get<std::string>();
  sig.hash = j.at("hash").get<std::string>();
}

void to_json(Json& j, const EquivalenceClass& cls) {
  j = Json{{"class_id", cls.class_id},
           {"members", cls.member_ids},
           {"representative", cls.representative}};
}

void from_json(const Json& j, EquivalenceClass& cls) {
  cls.class_id = j.at("class_id").get<std::string>();
  cls.member_ids = j.at("members").get<std::vector<std::string>>();
  cls.representative = j.at("representative").get<std::string>();
}

}  // namespace perfedit

#include <algorithm>
#include <string>

#include "morph/errors.hpp"
#include "morph/problem.hpp"

namespace morph {

namespace {

struct Bundled {
  const char *name;
  const char *source;
};

// Generated at configure time from data/examples/*.json.
#include "bundled_examples.inc"

}  // namespace

std::vector<std::string> bundled_example_names() {
  std::vector<std::string> out;
  for (const Bundled &b : kBundled) out.emplace_back(b.name);
  return out;
}

std::string bundled_example_source(std::string_view name) {
  for (const Bundled &b : kBundled) {
    if (name == b.name) return b.source;
  }
  std::string known;
  for (const Bundled &b : kBundled) {
    known += known.empty() ? "" : ", ";
    known += b.name;
  }
  throw LookupError("unknown example '" + std::string(name) + "'; known: " + known);
}

ProblemSpec bundled_example(std::string_view name) {
  return load_problem(bundled_example_source(name));
}

std::vector<ProblemSpec> bundled_examples() {
  std::vector<ProblemSpec> out;
  for (const Bundled &b : kBundled) out.push_back(load_problem(b.source));
  return out;
}

}  // namespace morph

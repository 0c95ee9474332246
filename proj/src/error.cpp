#include "burst/error.hpp"

#include <sstream>

namespace burst {

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::ostringstream out;
  out << violations.size() << " validation error" << (violations.size() == 1 ? "" : "s");
  for (const auto& v : violations) out << "\n  - " << v;
  return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace burst

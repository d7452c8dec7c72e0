#pragma once

#include <stdexcept>
#include <string>

namespace gardner {

// Contract violations throw (callers that hit one have a bug); kept on in
// release builds since none of these checks sit on a hot inner loop.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

[[noreturn]] inline void contract_failure(const char* expr, const char* file, int line,
                                          const std::string& detail = {}) {
  std::string msg = std::string("contract violated: ") + expr + " at " + file + ":" +
                    std::to_string(line);
  if (!detail.empty()) msg += " (" + detail + ")";
  throw ContractError(msg);
}

}  // namespace gardner

#define GARDNER_CHECK(expr)                                      \
  do {                                                           \
    if (!(expr)) ::gardner::contract_failure(#expr, __FILE__, __LINE__); \
  } while (0)

#define GARDNER_CHECK_MSG(expr, detail)                                    \
  do {                                                                     \
    if (!(expr)) ::gardner::contract_failure(#expr, __FILE__, __LINE__, (detail)); \
  } while (0)

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace jitscope {

// Every failure the library reports carries a machine-readable code such as
// "E_NO_SUCH_NODE" next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace jitscope

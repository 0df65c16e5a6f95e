#pragma once

#include <stdexcept>
#include <string>

namespace platoon {

enum class errc {
  invalid_parameter,
  not_connected,
  out_of_domain,
  unstable_parameters,
  insufficient_samples,
  insufficient_conditioning_mass,
  parse_error,
};

const char* to_string(errc c) noexcept;

class error : public std::runtime_error {
public:
  error(errc c, const std::string& msg);
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] void fail(errc c, const std::string& msg);

}  // namespace platoon

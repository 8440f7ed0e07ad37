#include "gcp/error.hpp"

namespace gcp {

int exit_code(ErrorCategory category) noexcept { return static_cast<int>(category); }

}  // namespace gcp

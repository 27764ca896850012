#pragma once

namespace pragmabench {

inline constexpr const char* kHarnessVersion = "0.1.0";

} // namespace pragmabench

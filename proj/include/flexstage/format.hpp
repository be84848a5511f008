#pragma once

#include <string>

namespace flexstage {

/// Shortest round-trip decimal representation; "nan"/"inf" for non-finite values.
std::string fmt_double(double v);

}  // namespace flexstage

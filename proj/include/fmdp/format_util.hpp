#pragma once

#include <string>

namespace fmdp {

/// Fixed 12-significant-digit rendering used by every report and CSV output.
std::string format_real(double v);

/// Shortest rendering that round-trips exactly (17 significant digits max).
std::string format_exact(double v);

} // namespace fmdp

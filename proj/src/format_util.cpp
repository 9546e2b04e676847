#include "fmdp/format_util.hpp"

#include <cstdio>
#include <cstdlib>

namespace fmdp {

std::string format_real(double v) {
    if (v == 0.0)
        v = 0.0; // drop the sign of negative zero
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string format_exact(double v) {
    if (v == 0.0)
        v = 0.0;
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

} // namespace fmdp

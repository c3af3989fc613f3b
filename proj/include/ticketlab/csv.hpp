#pragma once

#include <charconv>
#include <string>
#include <vector>

namespace ticketlab {

/// Shortest round-trip decimal form, locale-independent; the same double
/// always prints the same bytes.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline void csv_row(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
}

}  // namespace ticketlab

#ifndef BASECAST_TEXTIO_HPP
#define BASECAST_TEXTIO_HPP

#include <charconv>
#include <string>

namespace basecast {

/// Shortest round-trip decimal form; deterministic across runs.
inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline std::string format_double(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

} // namespace basecast

#endif // BASECAST_TEXTIO_HPP

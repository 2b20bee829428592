#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace eventlab {

// All recoverable failures surface as this exception type. The message is
// expected to be actionable (file, line/offset, stage tag where relevant).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void msg_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void msg_append(std::ostringstream& oss, T&& head, Rest&&... rest) {
    oss << std::forward<T>(head);
    msg_append(oss, std::forward<Rest>(rest)...);
}

}  // namespace detail

template <typename... Parts>
[[noreturn]] void fail(Parts&&... parts) {
    std::ostringstream oss;
    detail::msg_append(oss, std::forward<Parts>(parts)...);
    throw Error(oss.str());
}

template <typename... Parts>
void require(bool condition, Parts&&... parts) {
    if (!condition) fail(std::forward<Parts>(parts)...);
}

}  // namespace eventlab

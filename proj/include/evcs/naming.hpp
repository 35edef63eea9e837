#pragma once

// Variable and row labels of the form head(a,b,...).

#include <string>
#include <string_view>
#include <type_traits>

namespace evcs {

namespace detail {
inline void append_part(std::string& s, const std::string& v) { s += v; }
inline void append_part(std::string& s, std::string_view v) { s += v; }
inline void append_part(std::string& s, const char* v) { s += v; }
template <class T>
  requires std::is_integral_v<T>
void append_part(std::string& s, T v) {
  s += std::to_string(v);
}
}  // namespace detail

template <class... Parts>
std::string label(std::string_view head, const Parts&... parts) {
  std::string s(head);
  s += '(';
  bool first = true;
  ((s += first ? "" : ",", first = false, detail::append_part(s, parts)), ...);
  s += ')';
  return s;
}

}  // namespace evcs

#pragma once

namespace katolab {

inline constexpr double PI = 3.141592653589793238462643383279502884;
inline constexpr double SQRT_2PI = 2.506628274631000502415765284811045253;
inline constexpr double INV_SQRT_2PI = 0.398942280401432677939946059934381868;

} // namespace katolab

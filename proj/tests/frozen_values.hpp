#pragma once

// Generated by frozen_values.py.

namespace frozen {

inline constexpr double kRho8 = 0.00055972575024487916295;
inline constexpr double kJ0 = 0.0010554289962743517859;
inline constexpr double kJm1 = 0.00096283434118214406495;
inline constexpr double kJm1e6 = 7.4822782332432047494e-8;
inline constexpr double kJnear = 0.0030892017672861035517;
inline constexpr double kJ23re = 0.0010725871364767924717;
inline constexpr double kJ23im = 0.00043098751340566341706;
inline constexpr double kJfarre = 0.000022978387109107755403;
inline constexpr double kJfarim = 0.00002410993890135075154;
inline constexpr double kJ5re = 0.0019875541824659649063;
inline constexpr double kJ5im = 0.0017785377817453677895;
inline constexpr double kF10 = 0.0070814197297245427011;
inline constexpr double kFigZeroNeg = -0.097159718183155896219;
inline constexpr double kFigZeroPos = 3.4427872049629287186;
inline constexpr double kStableZero0 = 0.02005086818528764902;
inline constexpr double kStableZero1 = 3.1449193400384544418;
inline constexpr double kStableZero2 = 3.7626343800080168957;
inline constexpr double kMassEV = 0.0078837882371031254855;

}  // namespace frozen

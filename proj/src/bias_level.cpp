#include "stereolab/bias_level.hpp"

#include <cstdlib>

namespace stereolab {

BiasLevel BiasLevel::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&]() { return std::invalid_argument("invalid bias level '" + original + "'"); };
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) throw fail();
  long whole = 0;
  int frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool any_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_dot) throw fail();
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw fail();
    any_digit = true;
    if (!seen_dot) {
      whole = whole * 10 + (c - '0');
      if (whole > 1) throw std::invalid_argument("bias level '" + original + "' outside [-1, 1]");
    } else {
      if (frac_digits == 3) {
        if (c != '0') throw std::invalid_argument("bias level '" + original + "' has more than 3 decimals");
        continue;
      }
      frac = frac * 10 + (c - '0');
      ++frac_digits;
    }
  }
  if (!any_digit) throw fail();
  while (frac_digits < 3) {
    frac *= 10;
    ++frac_digits;
  }
  const long v = whole * kScale + frac;
  if (v > kScale) throw std::invalid_argument("bias level '" + original + "' outside [-1, 1]");
  return BiasLevel(static_cast<int>(negative ? -v : v));
}

std::string BiasLevel::str() const {
  const int a = std::abs(value_);
  std::string digits = std::to_string(a % kScale);
  digits.insert(0, 3 - digits.size(), '0');
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  std::string out = value_ < 0 ? "-" : "";
  out += std::to_string(a / kScale) + "." + digits;
  return out;
}

std::vector<BiasLevel> bias_grid(BiasLevel lo, BiasLevel hi, BiasLevel step) {
  const int s = step.thousandths();
  const int span = hi.thousandths() - lo.thousandths();
  if (s <= 0 || span < 0 || span % s != 0) {
    throw std::invalid_argument("bias grid " + lo.str() + ":" + hi.str() + ":" + step.str() +
                                " is not an exact increasing grid");
  }
  std::vector<BiasLevel> out;
  for (int v = lo.thousandths(); v <= hi.thousandths(); v += s) out.push_back(BiasLevel::from_thousandths(v));
  return out;
}

std::vector<BiasLevel> default_bias_grid() {
  constexpr int s = BiasLevel::kScale;
  return bias_grid(BiasLevel::from_thousandths(-s), BiasLevel::from_thousandths(s),
                   BiasLevel::from_thousandths(200));
}

}  // namespace stereolab

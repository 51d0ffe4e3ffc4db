#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stereolab {

/// An induced-bias value held as an exact count of thousandths, so grid
/// points never drift and serve directly as file names and ledger keys.
class BiasLevel {
 public:
  static constexpr int kScale = 1000;

  constexpr BiasLevel() = default;
  static constexpr BiasLevel from_thousandths(int v) { return BiasLevel(v); }

  /// Parses a decimal such as "-0.8", "+1" or "0.25" (at most 3 decimals).
  static BiasLevel parse(std::string_view text);

  constexpr int thousandths() const { return value_; }
  double value() const { return static_cast<double>(value_) / kScale; }
  /// 1 - |b| / 2, the size ratio of a biased set relative to its balanced parent.
  double size_ratio() const {
    const int a = value_ < 0 ? -value_ : value_;
    return static_cast<double>(2 * kScale - a) / (2 * kScale);
  }

  /// Shortest decimal with at least one fractional digit: "-0.8", "0.0", "0.25".
  std::string str() const;

  friend constexpr auto operator<=>(BiasLevel, BiasLevel) = default;

 private:
  explicit constexpr BiasLevel(int v) : value_(v) {}
  int value_ = 0;
};

/// Inclusive grid lo, lo+step, ..., hi. Throws std::invalid_argument unless
/// step > 0 and (hi - lo) is a multiple of step.
std::vector<BiasLevel> bias_grid(BiasLevel lo, BiasLevel hi, BiasLevel step);

/// -1.0, -0.8, ..., +1.0.
std::vector<BiasLevel> default_bias_grid();

}  // namespace stereolab

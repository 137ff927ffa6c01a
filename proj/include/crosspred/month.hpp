#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace crosspred {

/// Calendar month. Dates in this library are month-granular only.
struct MonthStamp {
  int year = 1970;
  int month = 1;  // 1..12

  /// Months since year 0, January.
  constexpr int ordinal() const { return year * 12 + (month - 1); }

  static constexpr MonthStamp from_ordinal(int ord) {
    int y = ord >= 0 ? ord / 12 : -((-ord + 11) / 12);
    return MonthStamp{y, ord - y * 12 + 1};
  }

  constexpr MonthStamp plus_months(int k) const { return from_ordinal(ordinal() + k); }

  friend constexpr int months_between(MonthStamp from, MonthStamp to) {
    return to.ordinal() - from.ordinal();
  }

  friend constexpr auto operator<=>(MonthStamp a, MonthStamp b) { return a.ordinal() <=> b.ordinal(); }
  friend constexpr bool operator==(MonthStamp a, MonthStamp b) { return a.ordinal() == b.ordinal(); }

  /// Parses `YYYY-MM`. Anything finer (e.g. `YYYY-MM-DD`) is a ParseError.
  static MonthStamp parse(std::string_view text);

  std::string str() const;
};

}  // namespace crosspred

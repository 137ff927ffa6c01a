#include "crosspred/month.hpp"

#include <charconv>
#include <cstdio>

#include "crosspred/error.hpp"

namespace crosspred {

MonthStamp MonthStamp::parse(std::string_view text) {
  auto fail = [&](const char* why) {
    return Error(Errc::ParseError, "bad month '" + std::string(text) + "' (" + why + ")");
  };
  if (text.size() != 7 || text[4] != '-') {
    if (text.size() > 7 && text[4] == '-' && text[7] == '-') throw fail("intramonth dates are not accepted");
    throw fail("expected YYYY-MM");
  }
  int y = 0, m = 0;
  auto [p1, e1] = std::from_chars(text.data(), text.data() + 4, y);
  auto [p2, e2] = std::from_chars(text.data() + 5, text.data() + 7, m);
  if (e1 != std::errc{} || p1 != text.data() + 4 || e2 != std::errc{} || p2 != text.data() + 7)
    throw fail("non-numeric field");
  if (m < 1 || m > 12) throw fail("month out of range");
  return MonthStamp{y, m};
}

std::string MonthStamp::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

}  // namespace crosspred

#include "doctest.h"
#include "ervc/error.hpp"
#include "ervc/io.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

using namespace ervc;

TEST_CASE("csv parse and escape") {
  const auto rows = parse_csv("a,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\n\n3,,\r\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"1", "x,y", "he said \"hi\""});
  CHECK(rows[2] == std::vector<std::string>{"3", "", ""});
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
  for (std::string s : {"x", "a,b", "\"", "two\nlines"}) CHECK(parse_csv(csv_escape(s) + "\n")[0][0] == s);
}

TEST_CASE("format_real round-trips") {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23,
                   std::numeric_limits<double>::denorm_min()})
    CHECK(std::strtod(format_real(v).c_str(), nullptr) == v);
  CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("little-endian primitives") {
  std::vector<std::uint8_t> b;
  put_u32le(b, 0x04030201u);
  put_u64le(b, 0x0807060504030201ull);
  CHECK(b[0] == 1);
  CHECK(b[3] == 4);
  CHECK(get_u32le(b, 0) == 0x04030201u);
  CHECK(get_u64le(b, 4) == 0x0807060504030201ull);
  CHECK(get_u16le(b, 0) == 0x0201);
}

TEST_CASE("missing file is an Io error") {
  CHECK_THROWS_AS(read_file("/nonexistent/definitely/missing"), Error);
}

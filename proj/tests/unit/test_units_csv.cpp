#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wpt/csv.hpp"
#include "wpt/errors.hpp"
#include "wpt/units.hpp"

using namespace wpt;

TEST_SUITE("units") {
  TEST_CASE("power strings carry their unit") {
    CHECK(parse_power("3") == doctest::Approx(3.0));
    CHECK(parse_power("3 W") == doctest::Approx(3.0));
    CHECK(parse_power("2.8mW") == doctest::Approx(2.8e-3));
    CHECK(parse_power("2.8 mW") == doctest::Approx(2.8e-3));
    CHECK(parse_power("5uW") == doctest::Approx(5e-6));
    CHECK(parse_power("7 nW") == doctest::Approx(7e-9));
    CHECK_THROWS_AS(parse_power("3 kg"), ValidationError);
    CHECK_THROWS_AS(parse_power(""), ValidationError);
    CHECK_THROWS_AS(parse_power("W"), ValidationError);
  }

  TEST_CASE("power lists") {
    const auto v = parse_power_list("0.5,1 W, 250mW");
    REQUIRE(v.size() == 3);
    CHECK(v[0] == doctest::Approx(0.5));
    CHECK(v[1] == doctest::Approx(1.0));
    CHECK(v[2] == doctest::Approx(0.25));
  }

  TEST_CASE("formatted numbers round-trip") {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
      CHECK(std::stod(format_number(x)) == x);
    }
    CHECK(format_number(0.5) == "0.5");
  }
}

TEST_SUITE("csv") {
  TEST_CASE("writer emits header then rows") {
    std::ostringstream out;
    CsvWriter csv(out, {"a", "b", "c"});
    csv.cell(1).cell(0.25).cell(std::string("x"));
    csv.end_row();
    CHECK(out.str() == "a,b,c\n1,0.25,x\n");
  }

  TEST_CASE("reader requires a header and numeric cells") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto good = dir / "wpt_csv_good.csv";
    std::ofstream(good) << "x,y\n1,2\n3.5,4\n";
    const NumericTable t = read_numeric_csv(good.string());
    CHECK(t.header == std::vector<std::string>{"x", "y"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][0] == 3.5);

    const auto bad = dir / "wpt_csv_bad.csv";
    std::ofstream(bad) << "x,y\n1,oops\n";
    CHECK_THROWS_AS(read_numeric_csv(bad.string()), ValidationError);
    CHECK_THROWS_AS(read_numeric_csv((dir / "wpt_csv_missing.csv").string()), ValidationError);
  }
}

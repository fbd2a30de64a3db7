#include <doctest.h>

#include <cstring>

#include "eosprobe/config.hpp"
#include "eosprobe/errors.hpp"

using namespace eosprobe;
using cfg::Config;

TEST_SUITE("config") {
  TEST_CASE("parses dotted keys, comments and blank lines") {
    const auto c = Config::from_string(
        "# a comment\n"
        "train.eta=0.001\n"
        "\n"
        "data.n_d = 128   # trailing comment\n"
        "model.hidden=32,32\n");
    CHECK(c.get_double("train.eta") == doctest::Approx(0.001));
    CHECK(c.get_int("data.n_d") == 128);
    const auto hidden = c.get_int_list("model.hidden");
    REQUIRE(hidden.size() == 2);
    CHECK(hidden[0] == 32);
  }

  TEST_CASE("overrides win over the file") {
    auto c = Config::from_string("train.eta=0.001\n");
    c.set("train.eta=0.02");
    CHECK(c.get_double("train.eta") == doctest::Approx(0.02));
  }

  TEST_CASE("serialization is canonical and stable") {
    auto c = Config::from_string("b.key=2\na.key=1\n");
    const std::string text = c.to_string();
    CHECK(text.find("a.key=1") < text.find("b.key=2"));
    CHECK(text.rfind("# eosprobe", 0) == 0);

    // Round trip through the parser reproduces the same canonical text.
    CHECK(Config::from_string(text).to_string() == text);
  }

  TEST_CASE("typed getters validate their input") {
    auto c = Config::from_string("x=abc\nflag=yes\nlist=1,2,oops\n");
    CHECK_THROWS_AS(c.get_double("x"), ConfigError);
    CHECK_THROWS_AS(c.get_int("x"), ConfigError);
    CHECK(c.get_bool("flag", false));
    CHECK_THROWS_AS(c.get_double_list("list"), ConfigError);
    CHECK_THROWS_AS(c.get_string("missing"), ConfigError);
    CHECK(c.get_string("missing", "fallback") == "fallback");
  }

  TEST_CASE("malformed lines and overrides are rejected") {
    CHECK_THROWS_AS(Config::from_string("just a line without equals\n"), ConfigError);
    Config c;
    CHECK_THROWS_AS(c.set("noequals"), ConfigError);
    CHECK_THROWS_AS(c.set("=value"), ConfigError);
  }
}

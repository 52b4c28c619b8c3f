#include <doctest.h>

#include <sstream>

#include "npbandit/config.hpp"
#include "npbandit/errors.hpp"

using namespace npbandit;

namespace {
KeyValues parse(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}
}  // namespace

TEST_CASE("key-value parsing strips comments and whitespace") {
    const auto kv = parse("# header\n  beta = 0.75  # trailing\n\nname=scaling\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("beta") == "0.75");
    CHECK(kv.at("name") == "scaling");
}

TEST_CASE("malformed and duplicate lines are config errors") {
    CHECK_THROWS_AS(parse("just text\n"), ConfigError);
    CHECK_THROWS_AS(parse("a = 1\na = 2\n"), ConfigError);
}

TEST_CASE("typed getters") {
    const auto kv = parse("x = 2.5\nk = 12\ns = hello\nbad = 1.5e\n");
    CHECK(get_double(kv, "x") == 2.5);
    CHECK(get_int(kv, "k") == 12);
    CHECK(get_string(kv, "s") == "hello");
    CHECK(get_double(kv, "missing", 3.0) == 3.0);
    CHECK(get_int(kv, "missing", 7) == 7);
    CHECK_THROWS_AS(get_double(kv, "missing"), ConfigError);
    CHECK_THROWS_AS(get_double(kv, "bad"), ConfigError);
    CHECK_THROWS_AS(get_int(kv, "x"), ConfigError);
}

TEST_CASE("unknown keys are named in the error") {
    const auto kv = parse("alpha = 1\nbogus = 2\n");
    try {
        reject_unknown_keys(kv, {"alpha"});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_NOTHROW(reject_unknown_keys(kv, {"alpha", "bogus"}));
}

TEST_CASE("integer lists and ranges") {
    CHECK(parse_int_list("1,2,5") == std::vector<std::int64_t>{1, 2, 5});
    CHECK(parse_int_list("0..3") == std::vector<std::int64_t>{0, 1, 2, 3});
    CHECK(parse_int_list(" 4 , 7..8 ") == std::vector<std::int64_t>{4, 7, 8});
    CHECK(parse_int_list("1,2,") == std::vector<std::int64_t>{1, 2});
    CHECK_THROWS_AS(parse_int_list("1,x"), ConfigError);
    CHECK_THROWS_AS(parse_int_list("5..2"), ConfigError);
}

TEST_CASE("prefix selection") {
    const auto kv = parse("map.kind = identity\nmap.beta = 1\nother = 3\n");
    const auto sub = with_prefix(kv, "map.");
    CHECK(sub.size() == 2);
    CHECK(sub.at("kind") == "identity");
}

TEST_CASE("config hash depends on content, not on line order") {
    const auto a = parse("a = 1\nb = 2\n");
    const auto b = parse("b = 2\na = 1\n");
    const auto c = parse("a = 1\nb = 3\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
    CHECK(canonical_text(a) == "a=1\nb=2\n");
}

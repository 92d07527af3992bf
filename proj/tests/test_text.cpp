#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "steer/error.hpp"
#include "steer/text.hpp"

#include "support.hpp"

#include <set>

using namespace steer;

namespace {

const FeatureRegistry& reg()
{
    return FeatureRegistry::builtin();
}

const Lexicon& lex()
{
    static const Lexicon lexicon = load_lexicon(std::nullopt, reg());
    return lexicon;
}

double value_of(const ParseResult& r, std::string_view id)
{
    return r.features.values[reg().require_index(id)];
}

bool masked(const ParseResult& r, std::string_view id)
{
    return r.features.mask[reg().require_index(id)];
}

std::string joined(const std::vector<std::string>& words)
{
    std::string out;
    for (const auto& w : words) {
        out += (out.empty() ? "" : " ") + w;
    }
    return out;
}

} // namespace

TEST_CASE("intensified phrases score above bare ones")
{
    const auto heavy = parse("A man with heavy beard", lex(), reg());
    const auto bare = parse("a man with beard", lex(), reg());
    CHECK(heavy.features.count() == 2);
    CHECK(masked(heavy, "gender"));
    CHECK(masked(heavy, "beard"));
    CHECK(value_of(heavy, "gender") == 1.0);
    CHECK(value_of(heavy, "beard") == 1.5);
    CHECK(value_of(bare, "beard") == 1.0);
    CHECK(value_of(heavy, "beard") > value_of(bare, "beard"));
}

TEST_CASE("empty and unknown text parse to an empty mask")
{
    const auto empty = parse("", lex(), reg());
    CHECK_FALSE(empty.features.any());
    CHECK(empty.trace.tokens.empty());
    CHECK(empty.trace.unmatched.empty());

    const auto garbage = parse("qwerty zxcv!!", lex(), reg());
    CHECK_FALSE(garbage.features.any());
    CHECK(garbage.trace.unmatched == std::vector<std::string>{"qwerty", "zxcv"});
    CHECK(garbage.trace.spans.empty());
}

TEST_CASE("a young woman with blonde long hair")
{
    const auto r = parse("A young woman with blonde, long hair.", lex(), reg());
    CHECK(r.features.count() == 4);
    CHECK(value_of(r, "age") == -1.5);
    CHECK(value_of(r, "gender") == -1.0);
    CHECK(value_of(r, "blonde_hair") == 1.0);
    CHECK(value_of(r, "hair_length") == 1.5);
    CHECK(r.trace.unmatched == std::vector<std::string>{"a", "with"});
}

TEST_CASE("longest match wins over shorter phrases")
{
    const auto r = parse("blonde hair", lex(), reg());
    REQUIRE(r.trace.spans.size() == 1);
    CHECK(r.trace.spans[0] == TokenSpan{0, 2});
    CHECK(r.trace.unmatched.empty());
}

TEST_CASE("negation flips the next span only")
{
    const auto r = parse("a man without beard and blue eyes", lex(), reg());
    CHECK(value_of(r, "beard") == -1.0);
    CHECK(value_of(r, "blue_eyes") == 1.0);
    CHECK(value_of(r, "gender") == 1.0);

    const auto broken = parse("no. glasses", lex(), reg());
    CHECK(value_of(broken, "sight_glasses") == 1.0);
}

TEST_CASE("modifiers multiply and do not cross clause breaks")
{
    CHECK(value_of(parse("slightly young", lex(), reg()), "age") == -0.75);
    CHECK(value_of(parse("very very long hair", lex(), reg()), "hair_length") == 3.0);
    CHECK(value_of(parse("extremely extremely elderly", lex(), reg()), "age") == 3.0);
    CHECK(value_of(parse("a little stubble", lex(), reg()), "beard") == 0.25);
    const auto split = parse("very. beard", lex(), reg());
    CHECK(value_of(split, "beard") == 1.0);
    CHECK(split.trace.unmatched == std::vector<std::string>{"very"});
}

TEST_CASE("the last mention of a feature wins")
{
    const auto r = parse("long hair, actually short hair", lex(), reg());
    CHECK(value_of(r, "hair_length") == -1.5);
    CHECK(r.trace.resolved.size() == 2);
}

TEST_CASE("tokenization lowercases and marks clause breaks")
{
    std::vector<bool> breaks;
    const auto tokens = tokenize("Big-Nose; SMALL ears", &breaks);
    CHECK(tokens == std::vector<std::string>{"big", "nose", "small", "ears"});
    CHECK(breaks == std::vector<bool>{false, false, true, false});
    CHECK(tokenize("caf\xc3\xa9 beard") == std::vector<std::string>{"caf\xc3\xa9", "beard"});
}

TEST_CASE("every lexicon entry parses to its base value")
{
    for (const auto& e : lex().entries()) {
        const auto r = parse(joined(e.phrase), lex(), reg());
        CAPTURE(joined(e.phrase));
        CHECK(r.features.count() == 1);
        CHECK(r.features.values[e.feature_index] == e.base_value);
    }
}

TEST_CASE("amplifying modifiers move every phrase away from zero")
{
    for (const auto& e : lex().entries()) {
        const auto& range = reg()[e.feature_index].range;
        for (const auto& m : lex().modifiers()) {
            if (m.multiplier <= 1.0) {
                continue;
            }
            const std::string text = joined(m.phrase) + " " + joined(e.phrase);
            const double bare = e.base_value;
            const double modified = parse(text, lex(), reg()).features.values[e.feature_index];
            const double unclamped = e.base_value * m.multiplier;
            CAPTURE(text);
            CHECK(std::abs(unclamped) > std::abs(bare));
            CHECK(modified == range.clamp(unclamped));
            CHECK(modified * bare > 0.0);
        }
    }
}

TEST_CASE("mask is set exactly for resolved features")
{
    const auto corpus = build_corpus(200, lex(), reg(), 5);
    for (const auto& item : corpus) {
        const auto r = parse(item.text, lex(), reg());
        std::set<std::string> resolved;
        for (const auto& [id, v] : r.trace.resolved) {
            resolved.insert(id);
        }
        for (std::size_t f = 0; f < reg().size(); ++f) {
            CHECK(r.features.mask[f] == (resolved.count(reg()[f].id) == 1));
        }
    }
}

TEST_CASE("parsing is deterministic")
{
    const std::string text = "An old man with very short hair, no glasses and slightly big ears";
    const auto a = parse(text, lex(), reg());
    const auto b = parse(text, lex(), reg());
    CHECK(a.features == b.features);
    CHECK(a.trace.resolved == b.trace.resolved);
}

TEST_CASE("generator examples")
{
    FeatureVector v(reg().size());
    CHECK(generate_description(v, lex(), reg(), 0) == "a person");
    v.set(reg().require_index("beard"), 1.5);
    CHECK(generate_description(v, lex(), reg(), 0) == "a person with heavy beard");
}

TEST_CASE("unrepresentable values name the feature")
{
    FeatureVector v(reg().size());
    v.set(reg().require_index("beard"), 0.3);
    try {
        generate_description(v, lex(), reg(), 0);
        FAIL("expected UnrepresentableValueError");
    } catch (const UnrepresentableValueError& e) {
        CHECK(std::string(e.what()).find("beard") != std::string::npos);
    }
}

TEST_CASE("generated descriptions parse back exactly")
{
    const auto corpus = build_corpus(1000, lex(), reg(), 42);
    REQUIRE(corpus.size() == 1000);
    std::size_t masked_total = 0;
    for (const auto& item : corpus) {
        CAPTURE(item.text);
        CHECK(parse(item.text, lex(), reg()).features == item.features);
        CHECK(generate_description(item.features, lex(), reg(), 7) != "");
        CHECK(parse(generate_description(item.features, lex(), reg(), 7), lex(), reg()).features == item.features);
        CHECK(item.features.count() <= lex().templates().max_features);
        masked_total += item.features.count();
    }
    CHECK(masked_total > 1000);
}

TEST_CASE("corpora respect exclusive color groups")
{
    const auto corpus = build_corpus(500, lex(), reg(), 9);
    for (const auto& item : corpus) {
        for (const auto& group : lex().templates().exclusive) {
            std::size_t on = 0;
            for (const auto& id : group) {
                on += item.features.mask[reg().require_index(id)] ? 1 : 0;
            }
            CHECK(on <= 1);
        }
    }
}

TEST_CASE("corpus size, determinism and serialization")
{
    CHECK(build_corpus(100, lex(), reg(), 1).size() == 100);
    const auto one = build_corpus(1, lex(), reg(), 1);
    REQUIRE(one.size() == 1);
    CHECK(parse(one[0].text, lex(), reg()).features == one[0].features);

    const auto a = build_corpus(50, lex(), reg(), 3);
    const auto b = build_corpus(50, lex(), reg(), 3);
    const auto text = serialize_corpus(a, reg());
    CHECK(text == serialize_corpus(b, reg()));
    CHECK(text != serialize_corpus(build_corpus(50, lex(), reg(), 4), reg()));

    const auto back = parse_corpus(text, reg());
    REQUIRE(back.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(back[i].text == a[i].text);
        CHECK(back[i].features == a[i].features);
    }
}

TEST_CASE("lexicon validation")
{
    CHECK_THROWS_AS(parse_lexicon(R"({"entries": [{"phrase": "tail", "feature": "tail", "value": 1, "slot": "noun"}],
                                      "modifiers": [], "negations": []})",
                                  reg()),
                    ValidationError);
    CHECK_THROWS_AS(parse_lexicon(R"({"entries": [{"phrase": "beard", "feature": "beard", "value": 9, "slot": "noun"}],
                                      "modifiers": [], "negations": []})",
                                  reg()),
                    ValidationError);
    CHECK_THROWS_AS(parse_lexicon(R"({"entries": [], "modifiers": [{"phrase": "mega", "multiplier": 4}],
                                      "negations": []})",
                                  reg()),
                    ValidationError);
    CHECK_THROWS_AS(parse_lexicon(R"({"entries": [{"phrase": "beard"}]})", reg()), FormatError);
}

TEST_CASE("phrase_value clamps after modifiers and negation")
{
    const ValueRange range{-3.0, 3.0};
    const std::vector<double> strong{2.0, 2.0};
    CHECK(phrase_value(1.0, strong, false, range) == 3.0);
    CHECK(phrase_value(1.0, strong, true, range) == -3.0);
    CHECK(phrase_value(1.5, std::vector<double>{0.5}, true, range) == -0.75);
}

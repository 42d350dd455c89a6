#include <doctest.h>

#include <map>
#include <random>

#include "support.hpp"
#include "tabprompt/codec.hpp"
#include "tabprompt/errors.hpp"
#include "tabprompt/protocols.hpp"

using namespace tabprompt;

namespace {

TableSchema two_col_schema() {
    return infer_schema(read_csv("c1,c2\nv1,v2\nv3,v4\n"), "c2");
}

DescriptorSet names(std::vector<std::string> cols) {
    std::vector<DescriptorEntry> e;
    for (auto& c : cols) e.push_back({c, c});
    return DescriptorSet(std::move(e), ProtocolTag::baseline);
}

}  // namespace

TEST_CASE("encode_row joins entries in schema order") {
    std::vector<std::string> row = {"v1", "v2"};
    CHECK(encode_row(row, names({"c1", "c2"})).text == "c1 is v1, c2 is v2");
    std::vector<std::string> one = {"30"};
    CHECK(encode_row(one, names({"age"})).text == "age is 30");
    CHECK_THROWS_AS(encode_row(row, names({"a", "b", "c"})), CodecError);
}

TEST_CASE("encode_corpus fixed and permuted") {
    auto t = read_csv("c1,c2,c3\na,b,c\nd,e,f\n");
    auto d = names({"c1", "c2", "c3"});
    auto fixed = encode_corpus(t, d);
    REQUIRE(fixed.size() == 2);
    CHECK(fixed[0].text == "c1 is a, c2 is b, c3 is c");
    CHECK(fixed[1].source_row_index == 1);
    auto p1 = encode_corpus(t, d, ColumnOrder::permuted, 5);
    auto p2 = encode_corpus(t, d, ColumnOrder::permuted, 5);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].text == p2[i].text);
    CHECK_THROWS_AS(encode_corpus(t, names({"c1", "c2"})), CodecError);
}

TEST_CASE("make_test_prompt") {
    auto d = names({"a", "b"});
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto p = make_test_prompt(d, s);
        CHECK(p.find(", ") == std::string::npos);
        CHECK((p == "a is" || p == "b is"));
        CHECK(make_test_prompt(d, s) == p);
        seen.insert(p);
    }
    CHECK(seen.size() == 2);
    CHECK_THROWS_AS(make_test_prompt(DescriptorSet{}, 1), CodecError);
}

TEST_CASE("make_test_prompt is uniform over descriptors") {
    auto d = names({"w", "x", "y", "z"});
    std::map<std::string, int> counts;
    const int draws = 10000;
    for (int s = 0; s < draws; ++s) ++counts[make_test_prompt(d, static_cast<std::uint64_t>(s))];
    REQUIRE(counts.size() == 4);
    for (const auto& [p, c] : counts) CHECK(std::abs(c / double(draws) - 0.25) <= 0.02);
}

TEST_CASE("parse_row examples") {
    auto s = two_col_schema();
    auto d = names({"c1", "c2"});
    auto ok = parse_row("c1 is v1, c2 is v2", s, d);
    CHECK(ok.complete);
    CHECK(ok.record() == Record{"v1", "v2"});
    CHECK(parse_row("c2 is v2, c1 is v1\n", s, d).record() == Record{"v1", "v2"});

    auto dup = parse_row("c1 is v1, c1 is v9", s, d);
    CHECK_FALSE(dup.complete);
    CHECK(dup.reason == RejectReason::duplicate_column);

    auto num_schema = infer_schema(read_csv("c1,c2\n1,x\n"), "c2");
    auto bad = parse_row("c1 is hello, c2 is x", num_schema, d);
    CHECK(bad.reason == RejectReason::non_numeric_value);

    CHECK(parse_row("", s, d).reason == RejectReason::empty_text);
    CHECK(parse_row("c1 is v1", s, d).reason == RejectReason::missing_column);
    CHECK(parse_row("c1 is v1, c9 is v2", s, d).reason == RejectReason::unknown_descriptor);
    CHECK(parse_row("c1 is v1, garbage", s, d).reason == RejectReason::malformed_segment);
    CHECK(parse_row("c1 is , c2 is v2", s, d).reason == RejectReason::empty_value);
    CHECK(parse_row("c1 is v1, c2 is v2, ", s, d).reason == RejectReason::malformed_segment);
}

TEST_CASE("parse_row prefers the longest descriptor") {
    auto s = infer_schema(read_csv("size,size big\n1,2\n"), "size");
    auto d = names({"size", "size big"});
    auto r = parse_row("size big is 2, size is 1", s, d);
    CHECK(r.complete);
    CHECK(r.record() == Record{"1", "2"});
}

TEST_CASE("descriptor sanitization") {
    CHECK(sanitize_descriptor("a,b") == "ab");
    CHECK(sanitize_descriptor("  many   spaces\there ") == "many spaces here");
    CHECK(sanitize_descriptor("this is odd") == "this is-odd");
    CHECK_THROWS_AS(DescriptorSet({{"a", ",,"}}, ProtocolTag::expert), CodecError);
    CHECK_THROWS_AS(DescriptorSet({{"a", "x y"}, {"b", "x  y"}}, ProtocolTag::expert), CodecError);
}

TEST_CASE("round trip over random schemas, fixed and permuted") {
    std::mt19937_64 rng(2024);
    for (int schema_no = 0; schema_no < 20; ++schema_no) {
        auto rt = testing::random_table(rng, 50, 1 + rng() % 12);
        auto schema = infer_schema(rt.table, rt.table.columns()[0]);
        auto d = baseline_descriptors(schema);
        for (auto order : {ColumnOrder::fixed, ColumnOrder::permuted}) {
            auto corpus = encode_corpus(rt.table, d, order, rng());
            for (std::size_t r = 0; r < corpus.size(); ++r) {
                auto parsed = parse_row(corpus[r].text, schema, d);
                REQUIRE_MESSAGE(parsed.complete, corpus[r].text, " -> ", parsed.detail);
                CHECK(parsed.record() == rt.table.rows()[r]);
            }
        }
    }
}

TEST_CASE("parse_row never throws on arbitrary text") {
    auto s = two_col_schema();
    auto d = names({"c1", "c2"});
    std::mt19937_64 rng(9);
    const std::string alphabet = "c12 is,v\n\r\t\"x";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int i = 0; i < 5000; ++i) {
        std::string text;
        std::size_t len = rng() % 40;
        for (std::size_t k = 0; k < len; ++k) text.push_back(alphabet[pick(rng)]);
        ParsedRow r;
        CHECK_NOTHROW(r = parse_row(text, s, d));
        CHECK(r.complete != r.reason.has_value());
    }
}

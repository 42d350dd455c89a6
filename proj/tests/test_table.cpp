#include <doctest.h>

#include <random>
#include <set>

#include "support.hpp"
#include "tabprompt/errors.hpp"
#include "tabprompt/table.hpp"

using namespace tabprompt;

TEST_CASE("read_csv reads a header and rows verbatim") {
    auto t = read_csv("a,b\n1,x\n2,y");
    CHECK(t.columns() == std::vector<std::string>{"a", "b"});
    CHECK(t.rows() == std::vector<Record>{{"1", "x"}, {"2", "y"}});
}

TEST_CASE("read_csv reports the ragged record") {
    try {
        read_csv("a,b\n1,2,3\n");
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.row() == 2);
        CHECK(e.exit_code() == kExitValidation);
    }
}

TEST_CASE("read_csv rejects degenerate input") {
    CHECK_THROWS_AS(read_csv(""), IngestError);
    CHECK_THROWS_AS(read_csv("\n\n"), IngestError);
    CHECK_THROWS_AS(read_csv("a,a\n1,2\n"), IngestError);
    CHECK_THROWS_AS(read_csv("a,b\n1,\n"), IngestError);
    CHECK_THROWS_AS(read_csv("a,b\n\"x, y\",1\n"), IngestError);
    CHECK_THROWS_AS(read_csv("a,b\nred is hot,1\n"), IngestError);
    CHECK_THROWS_AS(read_csv("a,b\n\"two\nlines\",1\n"), IngestError);
    CHECK_THROWS_AS(read_csv("a,b\n\"open,1\n"), IngestError);
}

TEST_CASE("read_csv handles quoting, CRLF and headerless input") {
    auto t = read_csv("name,v\r\n\"a \"\"q\"\"\",1\r\n\"b,c\",2\r\n");
    CHECK(t.rows()[0][0] == "a \"q\"");
    CHECK(t.rows()[1][0] == "b,c");
    auto h = read_csv("1,2\n3,4\n", false);
    CHECK(h.columns() == std::vector<std::string>{"c1", "c2"});
    CHECK(h.n_rows() == 2);
}

TEST_CASE("write-back preserves lexemes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto rt = testing::random_table(rng, 1 + rng() % 20, 1 + rng() % 6);
        auto again = read_csv(to_csv(rt.table));
        CHECK(again == rt.table);
    }
    auto dir = testing::temp_dir("table_roundtrip");
    auto t = read_csv("x,y\n007,1.50\n1e3,\"q,r\"\n");
    write_csv(dir / "t.csv", t);
    CHECK(load_csv(dir / "t.csv") == t);
}

TEST_CASE("infer_schema detects kinds, ranges and the task") {
    auto t = read_csv("num,cat,class\n1.5,g,gamma\n2,h,hadron\n3e1,g,gamma\n");
    auto s = infer_schema(t, "class");
    REQUIRE(s.specs.size() == 3);
    CHECK(s.specs[0].kind == ColumnKind::numeric);
    CHECK(s.specs[0].numeric_range->first == 1.5);
    CHECK(s.specs[0].numeric_range->second == 30.0);
    CHECK(s.specs[1].kind == ColumnKind::categorical);
    CHECK(s.specs[1].levels == std::vector<std::string>{"g", "h"});
    CHECK(s.task == Task::classification);
    CHECK(s.target().name == "class");
    CHECK(s.target_index() == 2);

    CHECK_THROWS_AS(infer_schema(t, "nope"), SchemaError);
    CHECK(infer_schema(t, "num").task == Task::regression);
    CHECK(infer_schema(t, "num", Task::classification).task == Task::classification);
    CHECK_THROWS_AS(infer_schema(t, "cat", Task::regression), SchemaError);
}

TEST_CASE("schema overrides") {
    auto t = read_csv("code,y\n1,a\n2,b\n");
    auto ov = parse_schema_overrides("# kinds\ncode,categorical,false\ny,categorical,true\n");
    auto s = infer_schema(t, "", std::nullopt, ov);
    CHECK(s.specs[0].kind == ColumnKind::categorical);
    CHECK(s.specs[0].levels == std::vector<std::string>{"1", "2"});
    CHECK(s.target().name == "y");
    CHECK_THROWS_AS(infer_schema(t, "code", std::nullopt, ov), SchemaError);
    CHECK_THROWS_AS(infer_schema(t, "y", std::nullopt, parse_schema_overrides("zz,numeric,false\n")), SchemaError);
    CHECK_THROWS_AS(parse_schema_overrides("code,numeric\n"), SchemaError);
}

TEST_CASE("check_conforms") {
    auto t = read_csv("a,b\n1,x\n");
    auto s = infer_schema(t, "b");
    CHECK_NOTHROW(check_conforms(t, s));
    CHECK_THROWS_AS(check_conforms(read_csv("a,c\n1,x\n"), s), SchemaError);
    CHECK_THROWS_AS(check_conforms(read_csv("a,b\nfoo,x\n"), s), SchemaError);
}

namespace {
Table numbered(std::size_t n) {
    std::vector<Record> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back({std::to_string(i), i % 2 ? "odd" : "even"});
    return Table({"id", "parity"}, std::move(rows));
}
}  // namespace

TEST_CASE("split sizes follow floor arithmetic") {
    auto p = split(numbered(100), 0.9, 7);
    CHECK(p.train.n_rows() == 90);
    CHECK(p.test.n_rows() == 10);
    auto big = split(numbered(20640), 0.9, 3);
    CHECK(big.train.n_rows() == 18576);
    CHECK(big.test.n_rows() == 2064);
}

TEST_CASE("split is deterministic and a partition") {
    auto t = numbered(57);
    auto a = split(t, 0.9, 42), b = split(t, 0.9, 42);
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.test_indices == b.test_indices);
    std::set<std::size_t> all(a.train_indices.begin(), a.train_indices.end());
    for (auto i : a.test_indices) CHECK(all.insert(i).second);
    CHECK(all.size() == 57);
    for (std::size_t k = 0; k < a.train_indices.size(); ++k) CHECK(a.train.rows()[k] == t.rows()[a.train_indices[k]]);
    CHECK(split(t, 0.9, 43).train_indices != a.train_indices);
}

TEST_CASE("split rejects bad input") {
    CHECK_THROWS_AS(split(numbered(1), 0.9, 0), SplitError);
    CHECK_THROWS_AS(split(numbered(10), 1.0, 0), SplitError);
    CHECK_THROWS_AS(split(numbered(10), 0.0, 0), SplitError);
}

TEST_CASE("column_ranges") {
    auto t = read_csv("n,c,one\n2,h,5\n9,g,5\n4,h,5\n");
    auto s = infer_schema(t, "c");
    CHECK(column_ranges(t, s) == std::vector<std::string>{"[2, 9]", "{g, h}", "[5, 5]"});
}

TEST_CASE("decimal helpers") {
    CHECK(parse_decimal("3e1") == 30.0);
    CHECK(parse_decimal("-0.25") == -0.25);
    CHECK_FALSE(parse_decimal("1.2.3"));
    CHECK_FALSE(parse_decimal("nan"));
    CHECK_FALSE(parse_decimal("inf"));
    CHECK_FALSE(parse_decimal(""));
    CHECK_FALSE(parse_decimal(" 1"));
    CHECK(format_decimal(30.0) == "30");
    CHECK(format_decimal(1.5) == "1.5");
}

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "chronofill/csv.hpp"
#include "chronofill/table.hpp"

#include "helpers.hpp"

using namespace chronofill;
namespace cht = chronofill::testing;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

TEST_CASE("cells carry numbers, labels, or explicit missingness") {
    const Cell missing = Cell::missing();
    CHECK(missing.is_missing());
    CHECK_THROWS_AS(missing.number(), Error);
    CHECK_THROWS_AS(missing.label(), Error);

    const Cell number = Cell::number(2.5);
    CHECK(number.number() == 2.5);
    CHECK_THROWS_AS(Cell::number(std::numeric_limits<double>::quiet_NaN()), Error);
    CHECK_THROWS_AS(Cell::number(std::numeric_limits<double>::infinity()), Error);

    const Cell cat = Cell::category("red");
    CHECK(cat.label() == "red");
    CHECK(cat == Cell::category("red"));
    CHECK(cat != Cell::category("blue"));
    CHECK(number != cat);
}

TEST_CASE("table construction validates shape and kinds") {
    CHECK_THROWS_AS(Table({}, {}, {}), Error);
    CHECK_THROWS_AS(Table({"a", "a"}, {ColumnKind::numeric(), ColumnKind::numeric()},
                          {Cell::number(1), Cell::number(2)}),
                    Error);
    // Cell count must divide evenly into rows.
    CHECK_THROWS_AS(Table({"a", "b"}, {ColumnKind::numeric(), ColumnKind::numeric()},
                          {Cell::number(1)}),
                    Error);
    // Two time columns are ambiguous.
    CHECK_THROWS_AS(Table({"t1", "t2"},
                          {ColumnKind::time(TimeFormat::OrdinalIndex),
                           ColumnKind::time(TimeFormat::OrdinalIndex)},
                          {Cell::number(1), Cell::number(2)}),
                    Error);
    // Categorical cell in a numeric column.
    CHECK_THROWS_AS(Table({"a"}, {ColumnKind::numeric()}, {Cell::category("x")}), Error);
    // Missing time value.
    CHECK_THROWS_WITH_AS(Table({"t"}, {ColumnKind::time(TimeFormat::OrdinalIndex)},
                               {Cell::missing()}),
                         doctest::Contains("fully observed"), Error);
}

TEST_CASE("tables sort rows by the time column, stably") {
    Table table({"t", "v"}, {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::numeric()},
                {Cell::number(3), Cell::number(30), Cell::number(1), Cell::number(10),
                 Cell::number(2), Cell::number(20)});
    CHECK(table.cell(0, 0).number() == 1);
    CHECK(table.cell(0, 1).number() == 10);
    CHECK(table.cell(2, 0).number() == 3);
    CHECK(table.cell(2, 1).number() == 30);
    CHECK(table.time_column() == std::optional<std::size_t>(0));
}

TEST_CASE("schema reports observed statistics and sorted vocabularies") {
    Table table({"t", "v", "c"},
                {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::numeric(),
                 ColumnKind::categorical()},
                {Cell::number(0), Cell::number(1), Cell::category("zebra"), Cell::number(1),
                 Cell::missing(), Cell::category("ant"), Cell::number(2), Cell::number(3),
                 Cell::category("ant")});
    const Schema schema = table.schema();
    REQUIRE(schema.columns.size() == 3);
    CHECK(schema.columns[1].observed_count == 2);
    CHECK(schema.columns[1].mean == doctest::Approx(2.0));
    CHECK(schema.columns[1].stddev == doctest::Approx(1.0));
    CHECK(schema.columns[2].vocabulary == std::vector<std::string>{"ant", "zebra"});
}

TEST_CASE("apply_mask hides exactly the addressed cells and records truth") {
    Table table = cht::numeric_table({"a", "b"}, {{1, 2}, {3, 4}, {5, 6}});
    const std::vector<MaskCoord> coords{{0, "a"}, {2, "b"}};
    const ApplyMaskResult result = apply_mask(table, coords);
    CHECK(result.masked.cell(0, 1).is_missing());
    CHECK(result.masked.cell(2, 2).is_missing());
    CHECK(result.masked.cell(1, 1).number() == 3);
    REQUIRE(result.ground_truth.size() == 2);
    CHECK(result.ground_truth[0].value.number() == 1);
    CHECK(result.ground_truth[1].value.number() == 6);
    // Original untouched.
    CHECK(table.cell(0, 1).number() == 1);
}

TEST_CASE("apply_mask rejects the time column, unknown columns, duplicates, and missing cells") {
    Table table = cht::numeric_table({"a"}, {{1}, {kNaN}});
    CHECK_THROWS_WITH_AS(apply_mask(table, {{0, "time"}}), doctest::Contains("time column"),
                         Error);
    CHECK_THROWS_AS(apply_mask(table, {{0, "nope"}}), Error);
    CHECK_THROWS_AS(apply_mask(table, {{5, "a"}}), Error);
    CHECK_THROWS_WITH_AS(apply_mask(table, {{1, "a"}}), doctest::Contains("already missing"),
                         Error);
    CHECK_THROWS_WITH_AS(apply_mask(table, {{0, "a"}, {0, "a"}}),
                         doctest::Contains("already missing"), Error);
}

TEST_CASE("count_maskable excludes the time column and missing cells") {
    Table table = cht::numeric_table({"a", "b"}, {{1, kNaN}, {3, 4}});
    CHECK(table.count_maskable() == 3);
    CHECK(table.count_missing() == 1);
}

TEST_CASE("csv parser handles quoting, escapes, and CRLF") {
    const auto rows = parse_csv_text("a,b\r\n\"x,y\",\"he said \"\"hi\"\"\"\n1,\n", "test");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "x,y");
    CHECK(rows[1][1] == "he said \"hi\"");
    CHECK(rows[2][1] == "");
    CHECK_THROWS_AS(parse_csv_text("a\n\"unterminated\n", "test"), Error);
}

TEST_CASE("csv_quote adds quotes only when needed") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("time literal forms parse to canonical values and back") {
    CHECK(match_time_format("2012/03/05/14") == TimeFormat::DatetimeYMDH);
    CHECK(match_time_format("06:30") == TimeFormat::HourMinute);
    CHECK(match_time_format("03:25:127") == TimeFormat::MinSecMs);
    CHECK_FALSE(match_time_format("12345").has_value());
    CHECK_FALSE(match_time_format("25:00").has_value()); // hour out of range

    CHECK(parse_time_value("2012/03/05/14", TimeFormat::DatetimeYMDH, "t") == 2012030514.0);
    CHECK(parse_time_value("06:30", TimeFormat::HourMinute, "t") == 390.0);
    CHECK(parse_time_value("03:25:127", TimeFormat::MinSecMs, "t") == 205127.0);
    CHECK(format_time_value(2012030514.0, TimeFormat::DatetimeYMDH) == "2012/03/05/14");
    CHECK(format_time_value(390.0, TimeFormat::HourMinute) == "06:30");
    CHECK(format_time_value(205127.0, TimeFormat::MinSecMs) == "03:25:127");
}

TEST_CASE("schema inference types numeric, time, and categorical columns") {
    const std::vector<std::vector<std::string>> rows = {
        {"when", "v", "tag"},
        {"06:30", "1.5", "on"},
        {"07:00", "", "off"},
        {"07:30", "2.5", "on"},
    };
    const Schema schema = infer_schema(rows);
    CHECK(schema.columns[0].kind.is_time());
    CHECK(schema.columns[0].kind.format == TimeFormat::HourMinute);
    CHECK(schema.columns[1].kind.is_numeric());
    CHECK(schema.columns[2].kind.is_categorical());
    CHECK(schema.columns[1].observed_count == 2);
}

TEST_CASE("schema inference hints promote numeric axes and settle ambiguity") {
    const std::vector<std::vector<std::string>> numeric_axis = {
        {"step", "v"}, {"0", "1"}, {"1", "2"}};
    CHECK_FALSE(infer_schema(numeric_axis).columns[0].kind.is_time());
    const Schema hinted = infer_schema(numeric_axis, std::optional<std::string>("step"));
    CHECK(hinted.columns[0].kind.is_time());
    CHECK(hinted.columns[0].kind.format == TimeFormat::OrdinalIndex);

    const std::vector<std::vector<std::string>> two_candidates = {
        {"a", "b"}, {"06:30", "07:30"}, {"06:31", "07:31"}};
    CHECK_THROWS_WITH_AS(infer_schema(two_candidates), doctest::Contains("hint"), Error);
    const Schema disambiguated = infer_schema(two_candidates, std::optional<std::string>("b"));
    CHECK(disambiguated.columns[1].kind.is_time());
    CHECK(disambiguated.columns[0].kind.is_categorical());

    CHECK_THROWS_AS(infer_schema(two_candidates, std::optional<std::string>("missing-col")),
                    Error);
}

TEST_CASE("csv write/read round-trips tables exactly") {
    cht::TempDir dir("csv");
    Table table({"when", "v", "tag"},
                {ColumnKind::time(TimeFormat::MinSecMs), ColumnKind::numeric(),
                 ColumnKind::categorical()},
                {Cell::number(205127), Cell::number(0.1), Cell::category("a,b"),
                 Cell::number(205128), Cell::missing(), Cell::category("plain"),
                 Cell::number(205129), Cell::number(-3.25), Cell::missing()});
    const std::string path = dir.path("table.csv");
    write_csv(table, path);
    const Table back = read_csv(path);
    CHECK(back == table);
}

TEST_CASE("read_csv with an explicit schema validates the header") {
    cht::TempDir dir("csv-schema");
    Table table = cht::numeric_table({"a"}, {{1}, {2}});
    const std::string path = dir.path("t.csv");
    write_csv(table, path);
    const Schema schema = table.schema();
    CHECK(read_csv(path, schema) == table);

    Schema wrong = schema;
    wrong.columns[1].name = "zzz";
    CHECK_THROWS_AS(read_csv(path, wrong), Error);
}

TEST_CASE("ground truth sidecar round-trips against a reference table") {
    cht::TempDir dir("truth");
    Table table({"t", "v", "c"},
                {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::numeric(),
                 ColumnKind::categorical()},
                {Cell::number(0), Cell::number(1.5), Cell::category("x"), Cell::number(1),
                 Cell::number(2.5), Cell::category("y")});
    const std::vector<GroundTruthCell> truth{{0, "v", Cell::number(1.5)},
                                             {1, "c", Cell::category("y")}};
    const std::string path = dir.path("truth.csv");
    write_ground_truth(truth, path);
    const auto back = read_ground_truth(path, table);
    REQUIRE(back.size() == 2);
    CHECK(back[0].row == 0);
    CHECK(back[0].column == "v");
    CHECK(back[0].value == Cell::number(1.5));
    CHECK(back[1].value == Cell::category("y"));
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "ksdyn/csv.hpp"
#include "ksdyn/error.hpp"
#include "ksdyn/stats.hpp"
#include "ksdyn/types.hpp"
#include "ksdyn/util.hpp"

using namespace ksdyn;

namespace {

FeatureRow row(const std::string& subject, const std::string& key,
               double hold, double ud) {
    return {subject, key, hold, ud, hold + ud};
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir =
        std::filesystem::temp_directory_path() / "ksdyn_test_core";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("digraph labels round-trip through make and split") {
    const auto label = make_digraph_label("Shift", "a");
    const auto [first, second] = split_digraph_label(label);
    CHECK_EQ(first, "Shift");
    CHECK_EQ(second, "a");
    CHECK_EQ(split_digraph_label("bare").first, "bare");
    CHECK_EQ(split_digraph_label("bare").second, "");
}

TEST_CASE("dataset tags map to names and back") {
    for (auto tag : {DatasetTag::Aalto, DatasetTag::BuffaloFixed,
                     DatasetTag::BuffaloFree, DatasetTag::Nanglae,
                     DatasetTag::Synthetic})
        CHECK_EQ(dataset_tag_from_name(dataset_tag_name(tag)), tag);
    CHECK_THROWS_AS(dataset_tag_from_name("mystery"), Error);
}

TEST_CASE("row validation flags each rejection cause") {
    auto good = row("s", "a→b", 0.1, 0.05);
    CHECK(validate_row(good).valid);

    auto bad = good;
    bad.hold = 0.0;
    CHECK_EQ(validate_row(bad).kind, RowValidity::Kind::NonPositive);

    bad = good;
    bad.up_down = -0.01;
    CHECK_EQ(validate_row(bad).kind, RowValidity::Kind::NegativeUd);
    ValidationOptions allow;
    allow.allow_negative_ud = true;
    CHECK(validate_row(bad, allow).valid);

    bad = good;
    bad.down_down = 11.0;
    CHECK_EQ(validate_row(bad).kind, RowValidity::Kind::Pause);

    bad = good;
    bad.hold = std::numeric_limits<double>::quiet_NaN();
    CHECK_EQ(validate_row(bad).kind, RowValidity::Kind::NonFinite);
}

TEST_CASE("segmentation keeps full blocks only, else the whole stream") {
    std::vector<FeatureRow> rows(10, row("s", "a→b", 0.1, 0.05));
    const auto samples = segment_samples("s", rows, 3);
    REQUIRE_EQ(samples.size(), 3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK_EQ(samples[i].rows.size(), 3);
        CHECK_EQ(samples[i].ordinal, i);
        CHECK_EQ(samples[i].subject, "s");
    }

    const auto whole = segment_samples("s", rows, 64);
    REQUIRE_EQ(whole.size(), 1);
    CHECK_EQ(whole[0].rows.size(), 10);

    CHECK(segment_samples("s", {}, 3).empty());
    CHECK_THROWS_AS(segment_samples("s", rows, 0), Error);
}

TEST_CASE("feature tables group rows by subject in appearance order") {
    FeatureTable table;
    table.rows = {row("b", "a→b", 0.1, 0.05), row("b", "b→c", 0.1, 0.05),
                  row("a", "a→b", 0.2, 0.01)};
    CHECK_EQ(table.subjects(), std::vector<std::string>{"b", "a"});
    CHECK_EQ(table.rows_for("b").size(), 2);
    CHECK_EQ(table.rows_for("a").size(), 1);
    CHECK(table.rows_for("missing").empty());
}

TEST_CASE("percent escaping round-trips awkward labels") {
    for (const std::string label :
         {"plain", "with space", "comma,colon", "arrow→key", "pct%sign",
          "tab\tchar", "", "ctrl\x01"}) {
        const auto escaped = percent_escape(label);
        CHECK_EQ(escaped.find(' '), std::string::npos);
        CHECK_EQ(percent_unescape(escaped), label);
    }
    CHECK_THROWS_AS(percent_unescape("bad%zz"), Error);
    CHECK_THROWS_AS(percent_unescape("trunc%2"), Error);
}

TEST_CASE("shortest round-trip formatting reparses to the same double") {
    for (double value :
         {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 123456.789, 1e-300, 6.02e23,
          0.030000000000000002, -2.2250738585072014e-308}) {
        const auto text = format_double(value);
        CHECK_EQ(std::stod(text), value);
    }
}

TEST_CASE("hashing matches the 64-bit FNV-1a reference values") {
    CHECK_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    CHECK_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    CHECK_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
    CHECK_EQ(hex64(0xcbf29ce484222325ULL), "cbf29ce484222325");
}

TEST_CASE("quantiles interpolate linearly over sorted values") {
    std::vector<double> values{4.0, 1.0, 3.0, 2.0};
    CHECK_EQ(stats::quantile(values, 0.0), 1.0);
    CHECK_EQ(stats::quantile(values, 1.0), 4.0);
    CHECK_EQ(stats::quantile(values, 0.5), doctest::Approx(2.5));
    CHECK_EQ(stats::median({5.0, 1.0, 3.0}), 3.0);
    CHECK_EQ(stats::interquartile_range({1.0, 2.0, 3.0, 4.0}),
             doctest::Approx(1.5));
    CHECK_THROWS_AS(stats::quantile(values, 1.5), Error);
    CHECK_THROWS_AS(stats::quantile({}, 0.5), Error);
}

TEST_CASE("csv records honor quoting, embedded delimiters and newlines") {
    CHECK_EQ(csv::split_record("a,b,c"),
             std::vector<std::string>{"a", "b", "c"});
    CHECK_EQ(csv::split_record("\"a,b\",c"),
             std::vector<std::string>{"a,b", "c"});
    CHECK_EQ(csv::split_record("\"he said \"\"hi\"\"\",x"),
             std::vector<std::string>{"he said \"hi\"", "x"});
    CHECK_EQ(csv::split_record("a\tb", '\t'),
             std::vector<std::string>{"a", "b"});
    CHECK_EQ(csv::escape_field("plain"), "plain");
    CHECK_EQ(csv::escape_field("a,b"), "\"a,b\"");
    CHECK_EQ(csv::escape_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST_CASE("canonical csv writing and reading round-trips a table") {
    FeatureTable table;
    table.rows = {row("user,1", "a→b", 0.1, 0.05),
                  row("user,1", "b→c", 0.09, 0.04),
                  row("u2", "a→b", 0.2, 0.01)};
    const auto path = temp_file("roundtrip.csv");
    write_canonical_csv(table, path, "manifest deadbeef");

    const auto loaded = read_canonical_csv(path, DatasetTag::Synthetic);
    REQUIRE_EQ(loaded.rows.size(), table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        CHECK_EQ(loaded.rows[i].subject, table.rows[i].subject);
        CHECK_EQ(loaded.rows[i].key, table.rows[i].key);
        CHECK_EQ(loaded.rows[i].hold,
                 doctest::Approx(table.rows[i].hold).epsilon(1e-9));
        CHECK_EQ(loaded.rows[i].down_down,
                 doctest::Approx(table.rows[i].down_down).epsilon(1e-9));
    }

    std::ifstream in(path);
    std::string first_line;
    std::getline(in, first_line);
    CHECK_EQ(first_line, "# manifest deadbeef");
    std::string header;
    std::getline(in, header);
    CHECK_EQ(header, kCanonicalCsvHeader);
}

TEST_CASE("canonical csv rejects a wrong header") {
    const auto path = temp_file("badheader.csv");
    std::ofstream(path) << "subject,key,H,UD\n\"s\",\"a\",1,2\n";
    CHECK_THROWS_AS(read_canonical_csv(path), Error);
    CHECK_THROWS_AS(read_canonical_csv("/nonexistent/nope.csv"), Error);
}

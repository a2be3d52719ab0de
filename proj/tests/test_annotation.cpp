#include <doctest.h>

#include "chartattack/annotation.hpp"
#include "chartattack/errors.hpp"
#include "fixtures.hpp"

using namespace chartattack;

TEST_SUITE_BEGIN("annotation");

TEST_CASE("parses a minimal vertical bar document") {
    ChartAnnotation a = parse_annotation(fixtures::kMinimalVBar);
    CHECK(a.chart_type == ChartType::v_bar);
    CHECK(a.categories == std::vector<std::string>{"2010", "2011"});
    REQUIRE(a.data.size() == 1);
    CHECK(a.data.at(0).first == "exports");
    CHECK(a.data.at(0).second == std::vector<double>{40, 70});
    CHECK(a.y_axis.axis_range.max_value == 100);
    CHECK(a.y_axis.direction == AxisDirection::bottom_to_top);  // default
    CHECK_FALSE(a.three_d_effect);
}

TEST_CASE("maps the 3D effect key") {
    json doc = json::parse(fixtures::kMinimalVBar);
    doc["3D effect"] = true;
    ChartAnnotation a = annotation_from_json(doc);
    CHECK(a.three_d_effect);
}

TEST_CASE("rejects a series shorter than the category list") {
    json doc = json::parse(fixtures::kMinimalVBar);
    doc["data"]["exports"] = json::array({40});  // one value for two categories
    try {
        annotation_from_json(doc);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.path() == "data.exports");
    }
}

TEST_CASE("rejects malformed documents and type mismatches") {
    CHECK_THROWS_AS(parse_annotation("{nope"), ParseError);
    json doc = json::parse(fixtures::kMinimalVBar);
    doc["data"]["exports"] = "forty";
    CHECK_THROWS_AS(annotation_from_json(doc), ParseError);
    json no_axes = json::parse(fixtures::kMinimalVBar);
    no_axes.erase("main_axes");
    CHECK_THROWS_AS(annotation_from_json(no_axes), ParseError);
}

TEST_CASE("serialization reaches a canonical fixed point") {
    std::string first = serialize_annotation(parse_annotation(fixtures::kMinimalVBar));
    std::string second = serialize_annotation(parse_annotation(first));
    CHECK(first == second);

    fixtures::Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        ChartAnnotation a = fixtures::random_annotation(rng);
        std::string s1 = serialize_annotation(a);
        ChartAnnotation reparsed = parse_annotation(s1);
        CHECK(reparsed == a);
        CHECK(serialize_annotation(reparsed) == s1);
    }
}

TEST_CASE("field-equal annotations serialize byte-identically") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    ChartAnnotation b = fixtures::make_v_bar(2, 3);
    CHECK(a == b);
    CHECK(serialize_annotation(a) == serialize_annotation(b));
}

TEST_CASE("unknown keys round-trip verbatim") {
    json doc = json::parse(fixtures::kMinimalVBar);
    doc["custom_tool_state"] = {{"nested", json::array({1, 2, 3})}};
    doc["main_axes"]["x_axis"]["label"] = "Year";
    ChartAnnotation a = annotation_from_json(doc);
    CHECK(a.extras.contains("custom_tool_state"));
    json out = annotation_to_json(a);
    CHECK(out["custom_tool_state"] == doc["custom_tool_state"]);
    CHECK(out["main_axes"]["x_axis"]["label"] == "Year");
}

TEST_CASE("integral floats canonicalize to integers") {
    json doc = json::parse(fixtures::kMinimalVBar);
    doc["data"]["exports"] = json::array({40.0, 70.5});
    std::string out = serialize_annotation(annotation_from_json(doc));
    CHECK(out.find("40,") != std::string::npos);
    CHECK(out.find("70.5") != std::string::npos);
    CHECK(out.find("40.0") == std::string::npos);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("validate");

TEST_CASE("a valid annotation yields an ok report") {
    ValidationReport r = validate(fixtures::make_v_bar(2, 4));
    CHECK(r.ok);
    CHECK(r.issues.empty());
}

TEST_CASE("log scale over a nonpositive range is flagged at the axis path") {
    ChartAnnotation a = fixtures::make_v_bar();
    a.y_axis.scale = AxisScale::log;  // range starts at 0
    ValidationReport r = validate(a);
    REQUIRE_FALSE(r.ok);
    bool found = false;
    for (const auto& issue : r.issues)
        if (issue.path == "main_axes.y_axis" && issue.code == "log_nonpositive_domain") found = true;
    CHECK(found);
}

TEST_CASE("every single-invariant mutation yields at least one issue") {
    auto issues_of = [](ChartAnnotation a) { return validate(a).issues.size(); };

    ChartAnnotation base = fixtures::make_v_bar(2, 3);
    REQUIRE(validate(base).ok);

    ChartAnnotation m1 = base;  // series length mismatch
    m1.data.find("s0")->pop_back();
    CHECK(issues_of(m1) >= 1);

    ChartAnnotation m2 = base;  // colors key mismatch
    m2.colors->set("ghost", "#112233");
    CHECK(issues_of(m2) >= 1);

    ChartAnnotation m3 = base;  // bad hex
    m3.colors->set("s0", "#12345");
    CHECK(issues_of(m3) >= 1);

    ChartAnnotation m4 = base;  // scaling factor key/shape/positivity
    SeriesValues f;
    f.set("s0", {1.0, 1.0, 1.0});
    m4.scaling_factors = f;  // missing s1
    CHECK(issues_of(m4) >= 1);

    ChartAnnotation m5 = base;
    SeriesValues f5;
    f5.set("s0", {1.0, -2.0, 1.0});
    f5.set("s1", {1.0, 1.0, 1.0});
    m5.scaling_factors = f5;
    CHECK(issues_of(m5) >= 1);

    ChartAnnotation m6 = fixtures::make_line();
    m6.stacked = true;
    CHECK(issues_of(m6) >= 1);

    ChartAnnotation m7 = fixtures::make_line();
    m7.three_d_effect = true;
    CHECK(issues_of(m7) >= 1);

    ChartAnnotation m8 = base;
    m8.y_axis.axis_range = {50, 50};
    CHECK(issues_of(m8) >= 1);
}

TEST_CASE("csv cross-check flags exactly the mutated cell") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    std::vector<CsvCell> table;
    for (const auto& [series, values] : a.data)
        for (std::size_t i = 0; i < values.size(); ++i)
            table.push_back({a.categories[i], series, values[i]});
    CHECK(validate(a, table).ok);

    table[2].value += 1.0;  // one-cell difference
    ValidationReport r = validate(a, table);
    REQUIRE_FALSE(r.ok);
    CHECK(r.issues.size() == 1);
    CHECK(r.issues[0].code == "csv_mismatch");
}

TEST_CASE("csv parser handles quoting and rejects bad headers") {
    auto cells = parse_csv_table("category,series,value\n\"a,b\",s1,4.5\n");
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].category == "a,b");
    CHECK(cells[0].value == 4.5);
    CHECK_THROWS_AS(parse_csv_table("cat,ser,val\n"), ParseError);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("simplify");

TEST_CASE("drops geometry keys but keeps the data") {
    json doc = json::parse(fixtures::kMinimalVBar);
    doc["bounding_boxes"] = json::array({json::array({1, 2, 3, 4})});
    doc["main_axes"]["x_axis"]["label_coordinates"] = json::array({10, 20});
    ChartAnnotation a = simplify_annotation(doc.dump());
    json out = annotation_to_json(a);
    CHECK_FALSE(out.contains("bounding_boxes"));
    CHECK_FALSE(out["main_axes"]["x_axis"].contains("label_coordinates"));
    CHECK(out["data"]["exports"].size() == 2);
}

TEST_CASE("an already simplified document is a fixed point") {
    ChartAnnotation once = simplify_annotation(fixtures::kMinimalVBar);
    ChartAnnotation twice = simplify_annotation(serialize_annotation(once));
    CHECK(once == twice);
}

TEST_CASE("minimal mode drops titles, legends, grids and bands") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    a.title = "Quarterly exports";
    a.grid_visible = true;
    a.bands_visible = true;
    ChartAnnotation min = simplify(a, SimplifyMode::minimal);
    CHECK_FALSE(min.title.has_value());
    CHECK(min.legend.empty());
    CHECK_FALSE(min.chart_legend_visible);
    CHECK_FALSE(min.grid_visible);
    CHECK_FALSE(min.bands_visible);
    // core data and format basics survive
    CHECK(min.data == a.data);
    CHECK(min.colors == a.colors);
    CHECK(min.stacked == a.stacked);
}

TEST_CASE("reorganizes a tabular source layout") {
    json raw = {{"type", "v_bar"},
                {"title", "T"},
                {"categories", json::array({"a", "b"})},
                {"series", json::array({{{"name", "s"}, {"values", json::array({3, 9})}}})},
                {"bboxes", json::array({1, 2})}};
    ChartAnnotation a = simplify_annotation(raw.dump());
    CHECK(a.categories == std::vector<std::string>{"a", "b"});
    REQUIRE(a.data.size() == 1);
    CHECK(a.data.at(0).second == std::vector<double>{3, 9});
    CHECK(validate(a).ok);
}

TEST_CASE("unrecognized layouts and missing tables are errors") {
    CHECK_THROWS_AS(simplify_annotation("{\"rows\": []}"), ParseError);
    CHECK_THROWS_AS(simplify_annotation("{\"type\": \"v_bar\"}"), ParseError);
}

TEST_SUITE_END();

#include <doctest.h>

#include "chartattack/color.hpp"
#include "chartattack/errors.hpp"
#include "chartattack/misleader.hpp"
#include "fixtures.hpp"

using namespace chartattack;

TEST_SUITE_BEGIN("compatibility");

TEST_CASE("type-level matrix matches the affected-chart-types column") {
    // archetype fixtures satisfy every structural condition, so the
    // compatible set reduces to the type-level matrix (24 cells)
    auto archetype = [](ChartType t) {
        ChartAnnotation a = t == ChartType::h_bar ? fixtures::make_h_bar(2, 3)
                            : t == ChartType::line ? fixtures::make_line(2, 3)
                                                   : fixtures::make_v_bar(2, 3);
        return a;
    };

    const std::set<MisleaderKind> bar_kinds{
        MisleaderKind::dual_axis,      MisleaderKind::inverted_axis,
        MisleaderKind::log_scale,      MisleaderKind::stacked_misuse,
        MisleaderKind::three_d,        MisleaderKind::color_scheme,
        MisleaderKind::misrepresentation};
    std::set<MisleaderKind> v_bar_kinds = bar_kinds;
    v_bar_kinds.insert(MisleaderKind::line_misuse);
    const std::set<MisleaderKind> line_kinds{
        MisleaderKind::dual_axis, MisleaderKind::inverted_axis, MisleaderKind::log_scale,
        MisleaderKind::misrepresentation};

    CHECK(compatible_misleaders(archetype(ChartType::v_bar)) == v_bar_kinds);
    CHECK(compatible_misleaders(archetype(ChartType::h_bar)) == bar_kinds);
    CHECK(compatible_misleaders(archetype(ChartType::line)) == line_kinds);

    // cell-by-cell against the type matrix
    int cells = 0;
    for (ChartType t : {ChartType::h_bar, ChartType::v_bar, ChartType::line}) {
        std::set<MisleaderKind> structural = compatible_misleaders(archetype(t));
        for (MisleaderKind k : kAllMisleaders) {
            CHECK(type_compatible(t, k) == (structural.count(k) > 0));
            ++cells;
        }
    }
    CHECK(cells == 24);
}

TEST_CASE("structural conditions narrow the type matrix") {
    ChartAnnotation three_series = fixtures::make_v_bar(3, 3);
    std::set<MisleaderKind> s = compatible_misleaders(three_series);
    CHECK_FALSE(s.count(MisleaderKind::dual_axis));  // needs exactly two series
    CHECK(s.count(MisleaderKind::log_scale));
    CHECK(s.count(MisleaderKind::stacked_misuse));
    CHECK(s.count(MisleaderKind::three_d));
    CHECK(s.count(MisleaderKind::color_scheme));
    CHECK(s.count(MisleaderKind::inverted_axis));
    CHECK(s.count(MisleaderKind::misrepresentation));
    CHECK(s.count(MisleaderKind::line_misuse));

    ChartAnnotation with_zero = fixtures::make_v_bar(1, 2);
    (*with_zero.data.find("s0"))[0] = 0.0;
    CHECK_FALSE(compatible_misleaders(with_zero).count(MisleaderKind::log_scale));

    ChartAnnotation stacked = fixtures::make_v_bar(2, 2);
    stacked.stacked = true;
    CHECK_FALSE(compatible_misleaders(stacked).count(MisleaderKind::stacked_misuse));

    ChartAnnotation already_3d = fixtures::make_h_bar(2, 2);
    already_3d.three_d_effect = true;
    CHECK_FALSE(compatible_misleaders(already_3d).count(MisleaderKind::three_d));
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("misleader");

TEST_CASE("inverted axis flips the value-axis direction") {
    MisleaderApplication app =
        apply_flag_misleader(fixtures::make_v_bar(), MisleaderKind::inverted_axis);
    CHECK(app.patch.tree ==
          json{{"main_axes", {{"y_axis", {{"direction", "top-to-bottom"}}}}}});
    CHECK_FALSE(app.misleading_answer.has_value());
    CHECK(app.provenance == Provenance::rule_based);

    MisleaderApplication h =
        apply_flag_misleader(fixtures::make_h_bar(), MisleaderKind::inverted_axis);
    CHECK(h.patch.tree ==
          json{{"main_axes", {{"x_axis", {{"direction", "right-to-left"}}}}}});
}

TEST_CASE("log scale patches only the scale when the domain is positive") {
    ChartAnnotation a = fixtures::make_v_bar();
    a.y_axis.axis_range = {1, 100};
    MisleaderApplication app = apply_flag_misleader(a, MisleaderKind::log_scale);
    CHECK(app.patch.tree == json{{"main_axes", {{"y_axis", {{"scale", "log"}}}}}});
}

TEST_CASE("log scale lifts a zero axis minimum to keep the domain legal") {
    ChartAnnotation a = fixtures::make_v_bar();  // y range [0, 100], data >= 10
    MisleaderApplication app = apply_flag_misleader(a, MisleaderKind::log_scale);
    ChartAnnotation out = apply_patch(a, app.patch);
    CHECK(out.y_axis.scale == AxisScale::log);
    CHECK(out.y_axis.axis_range.min_value > 0);
    CHECK(validate(out).ok);
}

TEST_CASE("three-d and line misuse emit single flag patches") {
    CHECK(apply_flag_misleader(fixtures::make_v_bar(), MisleaderKind::three_d).patch.tree ==
          json{{"3D effect", true}});
    CHECK(apply_flag_misleader(fixtures::make_v_bar(), MisleaderKind::line_misuse).patch.tree ==
          json{{"type", "line"}});
}

TEST_CASE("dual axis inserts a padded secondary axis for the second series") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    a.data.set("s1", {10, 20, 15});
    MisleaderApplication app = apply_dual_axis(a);
    const json& sec = app.patch.tree.at("secondary_axis").at("y_axis");
    double lo = sec.at("axis_range").at("min_value").get<double>();
    double hi = sec.at("axis_range").at("max_value").get<double>();
    // padding is 5% of the [10, 20] span on each side
    CHECK(lo == doctest::Approx(9.5));
    CHECK(hi == doctest::Approx(20.5));
    CHECK(sec.at("show_axis") == true);
    CHECK(sec.at("direction") == "bottom-to-top");
    CHECK(sec.at("scale") == "linear");

    ChartAnnotation stacked = a;
    stacked.stacked = true;
    MisleaderApplication app2 = apply_dual_axis(stacked);
    CHECK(app2.patch.tree.at("Stacked vertical bar chart") == false);

    CHECK_THROWS_AS(apply_dual_axis(fixtures::make_v_bar(1, 3)), IncompatibleError);
}

TEST_CASE("stacked misuse collapses categories into stack layers") {
    ChartAnnotation a = fixtures::make_v_bar(1, 3);
    a.categories = {"A", "B", "C"};
    a.data.set("s0", {1, 2, 3});
    MisleaderApplication app = apply_stacked_misuse(a);
    ChartAnnotation out = apply_patch(a, app.patch);

    CHECK(out.stacked);
    CHECK(out.categories == std::vector<std::string>{""});
    REQUIRE(out.data.size() == 3);
    CHECK(*out.data.find("A") == std::vector<double>{1});
    CHECK(*out.data.find("B") == std::vector<double>{2});
    CHECK(*out.data.find("C") == std::vector<double>{3});
    CHECK(out.chart_legend_visible);
    // three distinct layer colors
    std::set<std::string> hexes;
    for (const auto& [name, hex] : *out.colors) hexes.insert(hex);
    CHECK(hexes.size() == 3);
    CHECK(fixtures::sorted_data_values(out) == fixtures::sorted_data_values(a));

    ChartAnnotation already = a;
    already.stacked = true;
    CHECK_THROWS_AS(apply_stacked_misuse(already), IncompatibleError);
    CHECK_THROWS_AS(apply_stacked_misuse(fixtures::make_line()), IncompatibleError);
}

TEST_CASE("color scheme keeps variants near the base color") {
    ChartAnnotation a = fixtures::make_v_bar(3, 2);
    a.colors->set("s0", "#1F77B4");
    Rng rng(7);
    MisleaderApplication app = apply_color_scheme(a, rng);
    const json& colors = app.patch.tree.at("colors");
    REQUIRE(colors.size() == 3);

    Hsl base = rgb_to_hsl(parse_hex_color("#1F77B4"));
    std::set<std::string> seen;
    for (const auto& [name, hex] : colors.items()) {
        std::string h = hex.get<std::string>();
        CHECK(h.size() == 7);
        seen.insert(h);
        Hsl c = rgb_to_hsl(parse_hex_color(h));
        // independent color-space oracle; 8-bit quantization allowance
        CHECK(hue_distance(c.h, base.h) <= 18.0 + 2.0);
        CHECK(std::fabs(c.l - base.l) <= 0.12 + 0.01);
    }
    CHECK(seen.size() == 3);

    // single-series charts still get one valid variant
    Rng rng1(9);
    MisleaderApplication single = apply_color_scheme(fixtures::make_v_bar(1, 2), rng1);
    CHECK(single.patch.tree.at("colors").size() == 1);

    // determinism
    Rng r1(42), r2(42);
    CHECK(apply_color_scheme(a, r1).patch.tree == apply_color_scheme(a, r2).patch.tree);
}

TEST_CASE("misrepresentation adds factors and hides the value axis") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    a.data.set("s0", {5, 10});
    Rng rng(3);
    MisleaderApplication app = apply_misrepresentation(a, rng);
    const json& tree = app.patch.tree;
    CHECK(tree.at("main_axes").at("y_axis").at("show_axis") == false);
    const json& factors = tree.at("scaling_factors").at("s0");
    REQUIRE(factors.size() == 2);
    for (const auto& f : factors) {
        double v = f.get<double>();
        bool in_band = (v >= 0.4 && v <= 0.8) || (v >= 1.25 && v <= 1.8);
        CHECK(in_band);
    }
    // data untouched
    CHECK_FALSE(tree.contains("data"));
    ChartAnnotation out = apply_patch(a, app.patch);
    CHECK(fixtures::sorted_data_values(out) == fixtures::sorted_data_values(a));

    Rng r1(5), r2(5);
    CHECK(apply_misrepresentation(a, r1).patch.tree == apply_misrepresentation(a, r2).patch.tree);
}

TEST_CASE("dispatching apply honors compatibility and validity closure") {
    CHECK(apply(fixtures::make_v_bar(), MisleaderKind::three_d, 1).patch.tree ==
          json{{"3D effect", true}});
    CHECK_THROWS_AS(apply(fixtures::make_line(), MisleaderKind::stacked_misuse, 1),
                    IncompatibleError);

    fixtures::Rng rng(31);
    for (int i = 0; i < 60; ++i) {
        ChartAnnotation a = fixtures::random_annotation(rng);
        for (MisleaderKind k : compatible_misleaders(a)) {
            MisleaderApplication app = apply(a, k, 1000 + static_cast<uint64_t>(i));
            ChartAnnotation out = apply_patch(a, app.patch);
            CHECK(validate(out).ok);
        }
    }
}

TEST_CASE("applications are deterministic in (annotation, kind, seed)") {
    ChartAnnotation a = fixtures::make_h_bar(2, 4);
    for (MisleaderKind k : compatible_misleaders(a)) {
        MisleaderApplication x = apply(a, k, 77);
        MisleaderApplication y = apply(a, k, 77);
        CHECK(x == y);
    }
}

TEST_CASE("data preservation holds across every compatible application") {
    fixtures::Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        ChartAnnotation a = fixtures::random_annotation(rng);
        auto before = fixtures::sorted_data_values(a);
        for (MisleaderKind k : compatible_misleaders(a)) {
            ChartAnnotation out = apply_patch(a, apply(a, k, 7).patch);
            CHECK(fixtures::sorted_data_values(out) == before);
        }
    }
}

TEST_SUITE_END();

#include <doctest.h>

#include <cmath>

#include "chartattack/errors.hpp"
#include "chartattack/misleader.hpp"
#include "chartattack/patch.hpp"
#include "chartattack/raster.hpp"
#include "chartattack/render.hpp"
#include "chartattack/util.hpp"
#include "fixtures.hpp"

using namespace chartattack;
using namespace chartattack::render;

TEST_SUITE_BEGIN("scale");

TEST_CASE("linear scale is affine") {
    ScaleFn s{AxisScale::linear, 0, 100, 300, 0, false};
    CHECK(s(0) == 300);
    CHECK(s(50) == 150);
    CHECK(s(100) == 0);
}

TEST_CASE("log scale spaces decades evenly") {
    ScaleFn s{AxisScale::log, 1, 100, 0, 300, false};
    double p1 = s(1), p10 = s(10), p100 = s(100);
    CHECK(std::fabs((p10 - p1) - (p100 - p10)) < 0.5);
    CHECK(p1 == doctest::Approx(0));
    CHECK(p100 == doctest::Approx(300));
}

TEST_CASE("inversion is an exact reflection of the forward map") {
    ScaleFn fwd{AxisScale::linear, 3, 97, 12.5, 487.25, false};
    ScaleFn inv = fwd;
    inv.inverted = true;
    for (double v : {3.0, 10.0, 41.7, 96.9, 97.0})
        CHECK(inv(v) == (fwd.range_lo + fwd.range_hi) - fwd(v));  // bit-exact
}

TEST_CASE("nice ticks use 1/2/5 steps and stay within bounds") {
    std::vector<double> t = nice_ticks(0, 100, AxisScale::linear);
    REQUIRE(!t.empty());
    CHECK(t.front() >= 0);
    CHECK(t.back() <= 100);
    CHECK(t.size() <= 8);
    std::vector<double> logt = nice_ticks(1, 100, AxisScale::log);
    CHECK(logt == std::vector<double>{1, 10, 100});
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("layout");

TEST_CASE("misrepresentation scales the mark but labels the true value") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    a.data.set("s0", {40, 80});
    SeriesValues factors;
    factors.set("s0", {0.5, 1.0});
    a.scaling_factors = factors;

    LayoutModel m = layout(a);
    REQUIRE(m.marks.size() == 2);
    const MarkGeom& mark = m.marks[0];
    CHECK(mark.label_text == "40");
    CHECK(mark.free_end == doctest::Approx(m.value_scale(20.0)));  // 40 x 0.5
    CHECK(m.marks[1].label_text == "80");
    CHECK(m.marks[1].free_end == doctest::Approx(m.value_scale(80.0)));
}

TEST_CASE("inverted marks are exact reflections with unchanged sizes") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    ChartAnnotation b = apply_patch(a, apply_flag_misleader(a, MisleaderKind::inverted_axis).patch);
    LayoutModel ma = layout(a);
    LayoutModel mb = layout(b);
    REQUIRE(ma.marks.size() == mb.marks.size());
    double lo = ma.value_scale.range_lo, hi = ma.value_scale.range_hi;
    for (std::size_t i = 0; i < ma.marks.size(); ++i) {
        CHECK(mb.marks[i].free_end == (lo + hi) - ma.marks[i].free_end);
        CHECK(mb.marks[i].rect.h == doctest::Approx(ma.marks[i].rect.h));
        CHECK(mb.marks[i].rect.w == doctest::Approx(ma.marks[i].rect.w));
    }
}

TEST_CASE("stacked pixel extent matches the summed value within half a pixel") {
    ChartAnnotation a = fixtures::make_v_bar(1, 4);
    a.data.set("s0", {10, 20, 30, 25});  // stack total stays inside the axis range
    MisleaderApplication app = apply_stacked_misuse(a);
    ChartAnnotation stacked = apply_patch(a, app.patch);
    LayoutModel m = layout(stacked);
    double total_extent = 0;
    double sum = 0;
    for (const MarkGeom& mark : m.marks) total_extent += mark.rect.h;
    for (const auto& [name, values] : stacked.data) sum += values[0];
    double expected = std::fabs(m.value_scale(sum) - m.value_scale(0));
    CHECK(std::fabs(total_extent - expected) <= 0.5);
}

TEST_CASE("dual-axis series are independent") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    ChartAnnotation dual = apply_patch(a, apply_dual_axis(a).patch);
    LayoutModel before = layout(dual);

    ChartAnnotation moved = dual;
    moved.data.set("s1", {1, 2, 1});
    // keep the secondary axis fixed so only series-2 values change
    LayoutModel after = layout(moved);

    for (std::size_t i = 0; i < before.marks.size(); ++i) {
        if (before.marks[i].series != "s0") continue;
        CHECK(before.marks[i].free_end == after.marks[i].free_end);
        CHECK(before.marks[i].rect.y == after.marks[i].rect.y);
    }
    // and the secondary series really uses the secondary scale
    bool secondary_seen = false;
    for (const MarkGeom& mark : before.marks)
        if (mark.uses_secondary) secondary_seen = true;
    CHECK(secondary_seen);
}

TEST_CASE("a bar at the axis maximum spans the full plot height") {
    ChartAnnotation a = fixtures::make_v_bar(1, 1);
    a.data.set("s0", {100});  // y range is [0, 100]
    LayoutModel m = layout(a);
    REQUIRE(m.marks.size() == 1);
    CHECK(m.marks[0].rect.h == doctest::Approx(m.plot.h));
}

TEST_CASE("layout rejects empty data and nonpositive log domains") {
    ChartAnnotation a = fixtures::make_v_bar(1, 1);
    a.data = SeriesValues{};
    a.colors.reset();
    CHECK_THROWS_AS(layout(a), RenderError);

    ChartAnnotation b = fixtures::make_v_bar(1, 2);
    b.y_axis.scale = AxisScale::log;  // min is 0
    CHECK_THROWS_AS(layout(b), RenderError);
}

TEST_CASE("every data point owns exactly one in-plot mark") {
    fixtures::Rng rng(61);
    for (int i = 0; i < 40; ++i) {
        ChartAnnotation a = fixtures::random_annotation(rng);
        LayoutModel m = layout(a);
        std::size_t points = 0;
        for (const auto& [name, values] : a.data) points += values.size();
        CHECK(m.marks.size() == points);
        for (const MarkGeom& mark : m.marks) {
            double x = mark.is_bar ? mark.rect.x : mark.point.x;
            double y = mark.is_bar ? mark.rect.y : mark.point.y;
            CHECK(x >= m.plot.x - 1e-6);
            CHECK(y >= m.plot.y - 1e-6);
            if (mark.is_bar) {
                CHECK(mark.rect.x1() <= m.plot.x1() + 1e-6);
                CHECK(mark.rect.y1() <= m.plot.y1() + 1e-6);
            }
        }
    }
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("svg");

TEST_CASE("byte-deterministic output") {
    ChartAnnotation a = fixtures::make_h_bar(2, 3);
    a.title = "Deterministic";
    a.grid_visible = true;
    std::string s1 = render_svg(a);
    std::string s2 = render_svg(a);
    std::string s3 = render_svg(a);
    CHECK(s1 == s2);
    CHECK(s2 == s3);
}

TEST_CASE("hidden value axis drops its tick labels") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    std::string with_axis = render_svg(a);
    CHECK(with_axis.find(">100</text>") != std::string::npos);  // top tick label

    ChartAnnotation hidden = a;
    hidden.y_axis.show_axis = false;
    std::string without_axis = render_svg(hidden);
    CHECK(without_axis.find(">100</text>") == std::string::npos);
    // category labels survive: only the value axis was hidden
    CHECK(without_axis.find(">c0</text>") != std::string::npos);
}

TEST_CASE("misleader flags change the emitted shapes") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    std::string plain = render_svg(a);
    CHECK(plain.find("<polygon") == std::string::npos);

    ChartAnnotation threed = apply_patch(a, apply_flag_misleader(a, MisleaderKind::three_d).patch);
    CHECK(render_svg(threed).find("<polygon") != std::string::npos);

    ChartAnnotation line = fixtures::make_line(2, 4);
    CHECK(render_svg(line).find("<polyline") != std::string::npos);

    ChartAnnotation banded = a;
    banded.bands_visible = true;
    CHECK(render_svg(banded).find("fill-opacity") != std::string::npos);
}

TEST_CASE("legend and title render when enabled") {
    ChartAnnotation a = fixtures::make_v_bar(2, 2);
    a.title = "Title & more";
    a.chart_legend_visible = true;
    std::string svg = render_svg(a);
    CHECK(svg.find("Title &amp; more") != std::string::npos);
    CHECK(svg.find(">s0</text>") != std::string::npos);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("raster");

TEST_CASE("rasterization matches the configured size and dpi") {
    ChartAnnotation a = fixtures::make_v_bar(1, 1);
    a.x_axis.show_axis = false;
    a.y_axis.show_axis = false;
    RenderConfig cfg;
    cfg.width = 320;
    cfg.height = 200;
    Image img = rasterize_svg(render_svg(a, cfg), cfg);
    CHECK(img.width == 320);
    CHECK(img.height == 200);

    cfg.dpi = 192;
    Image hi = rasterize_svg(render_svg(a, cfg), cfg);
    CHECK(hi.width == 640);
    CHECK(hi.height == 400);
}

TEST_CASE("identical SVG bytes produce identical PNG bytes") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    a.title = "stable";
    std::string svg = render_svg(a);
    CHECK(rasterize(svg) == rasterize(svg));
}

TEST_CASE("marks actually hit the canvas") {
    ChartAnnotation a = fixtures::make_v_bar(1, 1);
    a.colors->set("s0", "#ff0000");
    RenderConfig cfg;
    Image img = rasterize_svg(render_svg(a, cfg), cfg);
    std::size_t red = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const uint8_t* p = img.px(x, y);
            if (p[0] > 200 && p[1] < 80 && p[2] < 80) ++red;
        }
    CHECK(red > 1000);  // the single bar covers a large area
}

TEST_CASE("pseudo-3d extrusion darkens pixels beside the bar") {
    ChartAnnotation a = fixtures::make_v_bar(1, 1);
    a.colors->set("s0", "#ff0000");
    ChartAnnotation threed = apply_patch(a, apply_flag_misleader(a, MisleaderKind::three_d).patch);
    RenderConfig cfg;
    Image img = rasterize_svg(render_svg(threed, cfg), cfg);
    std::size_t dark_red = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const uint8_t* p = img.px(x, y);
            if (p[0] > 150 && p[0] < 200 && p[1] < 60 && p[2] < 60) ++dark_red;
        }
    CHECK(dark_red > 100);
}

TEST_SUITE_END();

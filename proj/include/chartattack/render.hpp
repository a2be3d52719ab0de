#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chartattack/annotation.hpp"

namespace chartattack::render {

struct RenderConfig {
    int width = 800;
    int height = 600;
    int dpi = 96;          // rasterization density; 96 means 1 SVG unit = 1 px
    int font_px = 12;      // label height in SVG units
    int title_font_px = 16;
    bool suppress_secondary_ticks = false;
    // value labels: -1 auto (on when scaling factors exist), 0 off, 1 on
    int show_value_labels = -1;
    double bar_group_fill = 0.8;  // fraction of a category slot used by bars
    double three_d_dx = 14.0;     // pseudo-3D extrusion offset
    double three_d_dy = -9.0;

    bool operator==(const RenderConfig&) const = default;
};

json render_config_to_json(const RenderConfig& cfg);
RenderConfig render_config_from_json(const json& j);

// value -> pixel map. Inverted axes are evaluated as an exact reflection
// of the forward map so reflected marks are bit-identical mirrors.
struct ScaleFn {
    AxisScale kind = AxisScale::linear;
    double domain_lo = 0.0, domain_hi = 1.0;
    double range_lo = 0.0, range_hi = 1.0;
    bool inverted = false;

    double operator()(double value) const;
};

struct Pt {
    double x = 0, y = 0;
};

struct Rect {
    double x = 0, y = 0, w = 0, h = 0;
    double x1() const { return x + w; }
    double y1() const { return y + h; }
};

struct Tick {
    double value = 0;
    double pixel = 0;
    std::string label;
};

struct MarkGeom {
    std::string series;
    std::string category;
    bool is_bar = true;
    Rect rect;           // bar marks
    Pt point;            // line-chart vertices
    double free_end = 0; // pixel of the value-carrying edge along the value axis
    Pt label_anchor;
    std::string label_text;  // true data value, "" when labels are off
    std::string color;
    bool uses_secondary = false;
};

struct LegendRow {
    std::string name;
    std::string color;
};

struct LayoutModel {
    int canvas_w = 0, canvas_h = 0;
    Rect plot;
    ScaleFn value_scale;
    std::optional<ScaleFn> secondary_scale;
    std::vector<Tick> value_ticks;
    std::vector<Tick> secondary_ticks;
    std::vector<Tick> category_ticks;  // value = slot index, label = category
    std::vector<MarkGeom> marks;
    std::vector<Rect> bands;
    std::optional<Rect> legend_box;
    std::vector<LegendRow> legend_rows;
    std::optional<std::string> title;
    bool value_axis_is_y = true;
    bool three_d = false;
    bool stacked = false;
};

// "nice" tick positions: 1/2/5 x 10^k steps for linear scales, decades
// for log scales, at most max_ticks entries.
std::vector<double> nice_ticks(double lo, double hi, AxisScale scale, int max_ticks = 8);

// Chart geometry; throws RenderError on empty data or a nonpositive log
// domain. Honors scaling factors (mark extent = value x factor, label =
// true value), stacking offsets, secondary axes and direction flips.
LayoutModel layout(const ChartAnnotation& a, const RenderConfig& cfg = {});

// Deterministic SVG 1.1 document bytes.
std::string render_svg(const ChartAnnotation& a, const RenderConfig& cfg = {});

}  // namespace chartattack::render

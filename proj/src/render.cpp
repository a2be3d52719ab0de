#include "chartattack/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "chartattack/color.hpp"
#include "chartattack/errors.hpp"
#include "chartattack/util.hpp"

namespace chartattack::render {

json render_config_to_json(const RenderConfig& cfg) {
    return json{{"width", cfg.width},
                {"height", cfg.height},
                {"dpi", cfg.dpi},
                {"font_px", cfg.font_px},
                {"title_font_px", cfg.title_font_px},
                {"suppress_secondary_ticks", cfg.suppress_secondary_ticks},
                {"show_value_labels", cfg.show_value_labels},
                {"bar_group_fill", cfg.bar_group_fill},
                {"three_d_dx", cfg.three_d_dx},
                {"three_d_dy", cfg.three_d_dy}};
}

RenderConfig render_config_from_json(const json& j) {
    RenderConfig cfg;
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.dpi = j.value("dpi", cfg.dpi);
    cfg.font_px = j.value("font_px", cfg.font_px);
    cfg.title_font_px = j.value("title_font_px", cfg.title_font_px);
    cfg.suppress_secondary_ticks = j.value("suppress_secondary_ticks", cfg.suppress_secondary_ticks);
    cfg.show_value_labels = j.value("show_value_labels", cfg.show_value_labels);
    cfg.bar_group_fill = j.value("bar_group_fill", cfg.bar_group_fill);
    cfg.three_d_dx = j.value("three_d_dx", cfg.three_d_dx);
    cfg.three_d_dy = j.value("three_d_dy", cfg.three_d_dy);
    return cfg;
}

double ScaleFn::operator()(double value) const {
    double t;
    if (kind == AxisScale::log) {
        t = (std::log10(value) - std::log10(domain_lo)) /
            (std::log10(domain_hi) - std::log10(domain_lo));
    } else {
        t = (value - domain_lo) / (domain_hi - domain_lo);
    }
    double p = range_lo + t * (range_hi - range_lo);
    return inverted ? (range_lo + range_hi) - p : p;
}

std::vector<double> nice_ticks(double lo, double hi, AxisScale scale, int max_ticks) {
    std::vector<double> out;
    if (!(lo < hi)) return out;
    if (scale == AxisScale::log) {
        int k0 = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
        int k1 = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
        for (int k = k0; k <= k1; ++k) out.push_back(std::pow(10.0, k));
        if (out.size() < 2) out = {lo, hi};
        return out;
    }
    double span = hi - lo;
    double raw_step = span / std::max(1, max_ticks - 1);
    double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = 10.0 * mag;
    for (double m : {1.0, 2.0, 5.0}) {
        if (m * mag >= raw_step) {
            step = m * mag;
            break;
        }
    }
    double first = std::ceil(lo / step - 1e-9) * step;
    for (double v = first; v <= hi + step * 1e-9; v += step) {
        double snapped = std::round(v / step) * step;
        if (snapped == 0.0) snapped = 0.0;  // normalize -0
        out.push_back(snapped);
    }
    return out;
}

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

struct FactorLookup {
    const ChartAnnotation* a;
    double operator()(const std::string& series, std::size_t idx) const {
        if (!a->scaling_factors) return 1.0;
        const std::vector<double>* fs = a->scaling_factors->find(series);
        if (!fs || idx >= fs->size()) return 1.0;
        return (*fs)[idx];
    }
};

std::string series_color(const ChartAnnotation& a, const std::string& series, std::size_t idx) {
    if (a.colors) {
        if (const std::string* hex = a.colors->find(series)) return util::to_lower(*hex);
    }
    const auto& palette = default_palette();
    return palette[idx % palette.size()];
}

ScaleFn make_value_scale(const AxisSpec& axis, bool vertical, const Rect& plot,
                         const std::string& axis_path) {
    if (axis.scale == AxisScale::log && !(axis.axis_range.min_value > 0))
        throw RenderError(axis_path, "log scale over a nonpositive domain");
    ScaleFn s;
    s.kind = axis.scale;
    s.domain_lo = axis.axis_range.min_value;
    s.domain_hi = axis.axis_range.max_value;
    if (vertical) {
        s.range_lo = plot.y1();  // domain minimum sits at the plot bottom
        s.range_hi = plot.y;
        s.inverted = axis.direction == AxisDirection::top_to_bottom;
    } else {
        s.range_lo = plot.x;
        s.range_hi = plot.x1();
        s.inverted = axis.direction == AxisDirection::right_to_left;
    }
    return s;
}

}  // namespace

LayoutModel layout(const ChartAnnotation& a, const RenderConfig& cfg) {
    if (a.data.empty()) throw RenderError("data", "cannot lay out a chart without data");

    LayoutModel m;
    m.canvas_w = cfg.width;
    m.canvas_h = cfg.height;
    m.value_axis_is_y = a.value_axis_is_y();
    m.three_d = a.three_d_effect;
    m.stacked = a.stacked;
    m.title = a.title;

    double left = m.value_axis_is_y ? 70.0 : 96.0;
    double right = (a.secondary_axis && m.value_axis_is_y) ? 70.0 : 28.0;
    double top = (a.title ? 48.0 : 26.0) + (!m.value_axis_is_y && a.secondary_axis ? 24.0 : 0.0);
    double bottom = 52.0;
    m.plot = {left, top, cfg.width - left - right, cfg.height - top - bottom};
    if (m.plot.w < 10 || m.plot.h < 10) throw RenderError("", "canvas too small for the plot");

    m.value_scale = make_value_scale(a.value_axis(), m.value_axis_is_y, m.plot,
                                     "main_axes." + a.value_axis_key());
    if (a.secondary_axis) {
        m.secondary_scale = make_value_scale(*a.secondary_axis, m.value_axis_is_y, m.plot,
                                             "secondary_axis." + a.value_axis_key());
    }

    // category slots
    std::size_t ncat = std::max<std::size_t>(a.categories.size(), 1);
    const AxisSpec& cat_axis = a.category_axis();
    bool cat_reversed = cat_axis.direction == AxisDirection::right_to_left ||
                        cat_axis.direction == AxisDirection::top_to_bottom;
    double slot = (m.value_axis_is_y ? m.plot.w : m.plot.h) / static_cast<double>(ncat);
    auto slot_center = [&](std::size_t i) {
        std::size_t pos = cat_reversed ? ncat - 1 - i : i;
        if (m.value_axis_is_y) return m.plot.x + (static_cast<double>(pos) + 0.5) * slot;
        return m.plot.y1() - (static_cast<double>(pos) + 0.5) * slot;
    };
    for (std::size_t i = 0; i < a.categories.size(); ++i)
        m.category_ticks.push_back({static_cast<double>(i), slot_center(i), a.categories[i]});

    // ticks along the value axes
    const AxisSpec& vaxis = a.value_axis();
    for (double v : nice_ticks(vaxis.axis_range.min_value, vaxis.axis_range.max_value, vaxis.scale))
        m.value_ticks.push_back({v, m.value_scale(v), util::format_number(v)});
    if (m.secondary_scale && !cfg.suppress_secondary_ticks) {
        const AxisSpec& sec = *a.secondary_axis;
        for (double v : nice_ticks(sec.axis_range.min_value, sec.axis_range.max_value, sec.scale))
            m.secondary_ticks.push_back({v, (*m.secondary_scale)(v), util::format_number(v)});
    }

    // bands alternate between consecutive y-side boundaries
    if (a.bands_visible) {
        std::vector<double> bounds;
        if (m.value_axis_is_y) {
            for (const Tick& t : m.value_ticks) bounds.push_back(t.pixel);
        } else {
            for (std::size_t i = 0; i <= ncat; ++i)
                bounds.push_back(m.plot.y1() - static_cast<double>(i) * slot);
        }
        std::sort(bounds.begin(), bounds.end());
        for (std::size_t i = 0; i + 1 < bounds.size(); i += 2) {
            m.bands.push_back({m.plot.x, bounds[i], m.plot.w, bounds[i + 1] - bounds[i]});
        }
    }

    bool labels_on = cfg.show_value_labels == 1 ||
                     (cfg.show_value_labels == -1 && a.scaling_factors.has_value());
    FactorLookup factor{&a};

    double baseline_value = vaxis.scale == AxisScale::linear &&
                                    vaxis.axis_range.min_value <= 0 &&
                                    vaxis.axis_range.max_value >= 0
                                ? 0.0
                                : vaxis.axis_range.min_value;

    auto clamp_to_plot = [&](double p, bool along_y) {
        return along_y ? clampd(p, m.plot.y, m.plot.y1()) : clampd(p, m.plot.x, m.plot.x1());
    };

    std::size_t nseries = a.data.size();
    std::vector<double> stack_cursor(a.categories.size(), baseline_value);

    for (std::size_t si = 0; si < nseries; ++si) {
        const auto& [series, values] = a.data.at(si);
        bool secondary = m.secondary_scale && si == 1;
        const ScaleFn& scale = secondary ? *m.secondary_scale : m.value_scale;
        std::string color = series_color(a, series, si);

        for (std::size_t ci = 0; ci < values.size() && ci < a.categories.size(); ++ci) {
            double true_value = values[ci];
            double effective = true_value * factor(series, ci);

            MarkGeom mark;
            mark.series = series;
            mark.category = a.categories[ci];
            mark.color = color;
            mark.uses_secondary = secondary;
            double center = slot_center(ci);

            if (a.chart_type == ChartType::line) {
                mark.is_bar = false;
                double px = clamp_to_plot(scale(effective), true);
                mark.point = {center, px};
                mark.free_end = px;
                mark.label_anchor = {center, px - 7.0};
            } else {
                double from_v = baseline_value;
                double to_v = effective;
                if (a.stacked) {
                    from_v = stack_cursor[ci];
                    to_v = stack_cursor[ci] + effective;
                    stack_cursor[ci] = to_v;
                }
                double p0 = scale(from_v);
                double p1 = scale(to_v);
                mark.free_end = p1;

                double group = slot * cfg.bar_group_fill;
                double thick = a.stacked ? group : group / static_cast<double>(nseries);
                double offset = a.stacked ? 0.0 : static_cast<double>(si) * thick;
                double cross0 = center - group / 2.0 + offset;

                if (m.value_axis_is_y) {
                    double top_px = clamp_to_plot(std::min(p0, p1), true);
                    double bot_px = clamp_to_plot(std::max(p0, p1), true);
                    mark.rect = {cross0, top_px, thick, bot_px - top_px};
                    bool downward = p1 > p0;
                    mark.label_anchor = {cross0 + thick / 2.0,
                                         downward ? bot_px + cfg.font_px + 4.0 : top_px - 5.0};
                } else {
                    double lo_px = clamp_to_plot(std::min(p0, p1), false);
                    double hi_px = clamp_to_plot(std::max(p0, p1), false);
                    mark.rect = {lo_px, cross0, hi_px - lo_px, thick};
                    bool leftward = p1 < p0;
                    mark.label_anchor = {leftward ? lo_px - 5.0 : hi_px + 5.0,
                                         cross0 + thick / 2.0 + cfg.font_px / 2.0 - 1.0};
                }
            }
            if (labels_on) mark.label_text = util::format_number(true_value);
            m.marks.push_back(std::move(mark));
        }
    }

    // legend
    if (a.chart_legend_visible && !a.legend.empty()) {
        double row_h = 16.0;
        double widest = 0;
        for (const auto& name : a.legend) widest = std::max(widest, static_cast<double>(name.size()));
        double w = 26.0 + widest * (cfg.font_px * 0.62) + 8.0;
        double h = row_h * static_cast<double>(a.legend.size()) + 8.0;
        m.legend_box = Rect{m.plot.x1() - w - 6.0, m.plot.y + 6.0, w, h};
        for (std::size_t i = 0; i < a.legend.size(); ++i) {
            std::size_t data_idx = 0;
            for (std::size_t k = 0; k < a.data.size(); ++k)
                if (a.data.at(k).first == a.legend[i]) data_idx = k;
            m.legend_rows.push_back({a.legend[i], series_color(a, a.legend[i], data_idx)});
        }
    }
    return m;
}

// --- SVG emission ------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    // avoid the "-0.00" artifact so reflected geometry stays byte-stable
    if (std::strcmp(buf, "-0.00") == 0) return "0.00";
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string darken(const std::string& hex, double f) {
    Rgb c = parse_hex_color(hex);
    auto scale = [&](uint8_t v) { return static_cast<uint8_t>(std::lround(v * f)); };
    return to_hex({scale(c.r), scale(c.g), scale(c.b)});
}

class SvgWriter {
public:
    explicit SvgWriter(int w, int h) {
        out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
                std::to_string(h) + "\">\n";
    }

    void rect(const Rect& r, const std::string& fill, double opacity = 1.0) {
        out_ += "<rect x=\"" + fmt(r.x) + "\" y=\"" + fmt(r.y) + "\" width=\"" + fmt(r.w) +
                "\" height=\"" + fmt(r.h) + "\" fill=\"" + fill + "\"";
        if (opacity != 1.0) out_ += " fill-opacity=\"" + fmt(opacity) + "\"";
        out_ += "/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        out_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
                fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"/>\n";
    }

    void polygon(const std::vector<Pt>& pts, const std::string& fill) {
        out_ += "<polygon points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) out_ += " ";
            out_ += fmt(pts[i].x) + "," + fmt(pts[i].y);
        }
        out_ += "\" fill=\"" + fill + "\"/>\n";
    }

    void polyline(const std::vector<Pt>& pts, const std::string& stroke, double width) {
        out_ += "<polyline points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) out_ += " ";
            out_ += fmt(pts[i].x) + "," + fmt(pts[i].y);
        }
        out_ += "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"/>\n";
    }

    void text(double x, double y, const std::string& content, int font_px,
              const std::string& anchor = "start", const std::string& fill = "#333333") {
        out_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\" font-size=\"" +
                std::to_string(font_px) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
                xml_escape(content) + "</text>\n";
    }

    std::string finish() {
        out_ += "</svg>\n";
        return std::move(out_);
    }

private:
    std::string out_;
};

}  // namespace

std::string render_svg(const ChartAnnotation& a, const RenderConfig& cfg) {
    LayoutModel m = layout(a, cfg);
    SvgWriter svg(m.canvas_w, m.canvas_h);

    svg.rect({0, 0, static_cast<double>(m.canvas_w), static_cast<double>(m.canvas_h)}, "#ffffff");

    for (const Rect& band : m.bands) svg.rect(band, "#888888", 0.12);

    if (a.grid_visible) {
        for (const Tick& t : m.value_ticks) {
            if (m.value_axis_is_y)
                svg.line(m.plot.x, t.pixel, m.plot.x1(), t.pixel, "#cccccc", 1.0);
            else
                svg.line(t.pixel, m.plot.y, t.pixel, m.plot.y1(), "#cccccc", 1.0);
        }
    }

    // pseudo-3D extrusions sit behind their bars
    if (m.three_d) {
        double dx = cfg.three_d_dx, dy = cfg.three_d_dy;
        for (const MarkGeom& mark : m.marks) {
            if (!mark.is_bar) continue;
            const Rect& r = mark.rect;
            svg.polygon({{r.x, r.y}, {r.x + dx, r.y + dy}, {r.x1() + dx, r.y + dy}, {r.x1(), r.y}},
                        darken(mark.color, 0.85));
            svg.polygon({{r.x1(), r.y}, {r.x1() + dx, r.y + dy}, {r.x1() + dx, r.y1() + dy}, {r.x1(), r.y1()}},
                        darken(mark.color, 0.7));
        }
    }

    // marks: bars as rects, line charts as one polyline per series
    std::vector<std::pair<std::string, std::vector<Pt>>> polylines;
    for (const MarkGeom& mark : m.marks) {
        if (mark.is_bar) {
            svg.rect(mark.rect, mark.color);
        } else {
            if (polylines.empty() || polylines.back().first != mark.series)
                polylines.push_back({mark.series, {}});
            polylines.back().second.push_back(mark.point);
        }
    }
    for (auto& [series, pts] : polylines) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < a.data.size(); ++k)
            if (a.data.at(k).first == series) idx = k;
        svg.polyline(pts, series_color(a, series, idx), 2.0);
    }

    for (const MarkGeom& mark : m.marks) {
        if (mark.label_text.empty()) continue;
        std::string anchor = m.value_axis_is_y ? "middle" : (mark.label_anchor.x < mark.free_end ? "end" : "start");
        svg.text(mark.label_anchor.x, mark.label_anchor.y, mark.label_text, cfg.font_px, anchor,
                 "#222222");
    }

    const AxisSpec& vaxis = a.value_axis();
    if (vaxis.show_axis) {
        if (m.value_axis_is_y) {
            svg.line(m.plot.x, m.plot.y, m.plot.x, m.plot.y1(), "#333333", 1.5);
            for (const Tick& t : m.value_ticks) {
                svg.line(m.plot.x - 5, t.pixel, m.plot.x, t.pixel, "#333333", 1.0);
                svg.text(m.plot.x - 8, t.pixel + cfg.font_px * 0.35, t.label, cfg.font_px, "end");
            }
        } else {
            svg.line(m.plot.x, m.plot.y1(), m.plot.x1(), m.plot.y1(), "#333333", 1.5);
            for (const Tick& t : m.value_ticks) {
                svg.line(t.pixel, m.plot.y1(), t.pixel, m.plot.y1() + 5, "#333333", 1.0);
                svg.text(t.pixel, m.plot.y1() + cfg.font_px + 8, t.label, cfg.font_px, "middle");
            }
        }
    }

    const AxisSpec& caxis = a.category_axis();
    if (caxis.show_axis) {
        if (m.value_axis_is_y) {
            svg.line(m.plot.x, m.plot.y1(), m.plot.x1(), m.plot.y1(), "#333333", 1.5);
            for (const Tick& t : m.category_ticks)
                svg.text(t.pixel, m.plot.y1() + cfg.font_px + 8, t.label, cfg.font_px, "middle");
        } else {
            svg.line(m.plot.x, m.plot.y, m.plot.x, m.plot.y1(), "#333333", 1.5);
            for (const Tick& t : m.category_ticks)
                svg.text(m.plot.x - 8, t.pixel + cfg.font_px * 0.35, t.label, cfg.font_px, "end");
        }
    }

    if (m.secondary_scale && a.secondary_axis && a.secondary_axis->show_axis) {
        if (m.value_axis_is_y) {
            svg.line(m.plot.x1(), m.plot.y, m.plot.x1(), m.plot.y1(), "#666666", 1.5);
            for (const Tick& t : m.secondary_ticks) {
                svg.line(m.plot.x1(), t.pixel, m.plot.x1() + 5, t.pixel, "#666666", 1.0);
                svg.text(m.plot.x1() + 8, t.pixel + cfg.font_px * 0.35, t.label, cfg.font_px, "start",
                         "#555555");
            }
        } else {
            svg.line(m.plot.x, m.plot.y, m.plot.x1(), m.plot.y, "#666666", 1.5);
            for (const Tick& t : m.secondary_ticks) {
                svg.line(t.pixel, m.plot.y - 5, t.pixel, m.plot.y, "#666666", 1.0);
                svg.text(t.pixel, m.plot.y - 8, t.label, cfg.font_px, "middle", "#555555");
            }
        }
    }

    if (m.legend_box) {
        svg.rect(*m.legend_box, "#ffffff", 0.85);
        double y = m.legend_box->y + 12.0;
        for (const LegendRow& row : m.legend_rows) {
            svg.rect({m.legend_box->x + 5.0, y - 8.0, 12.0, 10.0}, row.color);
            svg.text(m.legend_box->x + 22.0, y, row.name, cfg.font_px);
            y += 16.0;
        }
    }

    if (m.title)
        svg.text(m.canvas_w / 2.0, 26.0, *m.title, cfg.title_font_px, "middle", "#111111");

    return svg.finish();
}

}  // namespace chartattack::render

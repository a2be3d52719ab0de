#include "chartattack/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "chartattack/errors.hpp"
#include "chartattack/util.hpp"

namespace chartattack {

json canonical_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.007199254740992e15)
        return json(static_cast<int64_t>(v));
    return json(v);
}

namespace {

constexpr const char* kStackedV = "Stacked vertical bar chart";
constexpr const char* kStackedH = "Stacked horizontal bar chart";
constexpr const char* kThreeD = "3D effect";
constexpr const char* kChartLegend = "Chart legend";

double require_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ParseError(path, "expected a number");
    return j.get<double>();
}

bool require_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ParseError(path, "expected a boolean");
    return j.get<bool>();
}

std::string require_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ParseError(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> require_number_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path, "expected a list of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(require_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::string> require_string_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path, "expected a list of strings");
    std::vector<std::string> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(require_string(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

struct ParsedAxis {
    AxisSpec spec;
    std::optional<std::vector<std::string>> categories;
};

ParsedAxis parse_axis(const json& j, const std::string& path, bool is_x_axis) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    ParsedAxis out;
    out.spec.direction = is_x_axis ? AxisDirection::left_to_right : AxisDirection::bottom_to_top;
    bool saw_range = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "axis_range") {
            if (!value.is_object()) throw ParseError(path + ".axis_range", "expected an object");
            for (const auto& [rk, rv] : value.items()) {
                if (rk == "min_value")
                    out.spec.axis_range.min_value = require_number(rv, path + ".axis_range.min_value");
                else if (rk == "max_value")
                    out.spec.axis_range.max_value = require_number(rv, path + ".axis_range.max_value");
                else
                    throw ParseError(path + ".axis_range." + rk, "unknown axis_range key");
            }
            if (!value.contains("min_value") || !value.contains("max_value"))
                throw ParseError(path + ".axis_range", "axis_range needs min_value and max_value");
            saw_range = true;
        } else if (key == "show_axis") {
            out.spec.show_axis = require_bool(value, path + ".show_axis");
        } else if (key == "direction") {
            out.spec.direction = direction_from_string(require_string(value, path + ".direction"));
        } else if (key == "scale") {
            out.spec.scale = scale_from_string(require_string(value, path + ".scale"));
        } else if (key == "categories") {
            out.categories = require_string_list(value, path + ".categories");
        } else {
            out.spec.extras[key] = value;
        }
    }
    if (!saw_range) throw ParseError(path, "missing axis_range");
    return out;
}

json axis_to_json(const AxisSpec& axis, const std::vector<std::string>* categories) {
    json j = json::object();
    j["axis_range"] = {{"min_value", canonical_number(axis.axis_range.min_value)},
                       {"max_value", canonical_number(axis.axis_range.max_value)}};
    j["show_axis"] = axis.show_axis;
    j["direction"] = to_string(axis.direction);
    j["scale"] = to_string(axis.scale);
    if (categories) {
        json cats = json::array();
        for (const auto& c : *categories) cats.push_back(c);
        j["categories"] = std::move(cats);
    }
    for (const auto& [k, v] : axis.extras.items()) j[k] = v;
    return j;
}

void check_invariants_or_throw(const ChartAnnotation& a) {
    ValidationReport report = validate(a);
    if (!report.ok) {
        const ValidationIssue& first = report.issues.front();
        throw ParseError(first.path, first.message);
    }
}

}  // namespace

std::string to_string(ChartType t) {
    switch (t) {
        case ChartType::h_bar: return "h_bar";
        case ChartType::v_bar: return "v_bar";
        case ChartType::line: return "line";
    }
    return "v_bar";
}

std::string to_string(AxisDirection d) {
    switch (d) {
        case AxisDirection::bottom_to_top: return "bottom-to-top";
        case AxisDirection::top_to_bottom: return "top-to-bottom";
        case AxisDirection::left_to_right: return "left-to-right";
        case AxisDirection::right_to_left: return "right-to-left";
    }
    return "bottom-to-top";
}

std::string to_string(AxisScale s) { return s == AxisScale::log ? "log" : "linear"; }

ChartType chart_type_from_string(std::string_view s) {
    if (s == "h_bar") return ChartType::h_bar;
    if (s == "v_bar") return ChartType::v_bar;
    if (s == "line") return ChartType::line;
    throw ParseError("type", "unknown chart type '" + std::string(s) + "'");
}

AxisDirection direction_from_string(std::string_view s) {
    if (s == "bottom-to-top") return AxisDirection::bottom_to_top;
    if (s == "top-to-bottom") return AxisDirection::top_to_bottom;
    if (s == "left-to-right") return AxisDirection::left_to_right;
    if (s == "right-to-left") return AxisDirection::right_to_left;
    throw ParseError("direction", "unknown axis direction '" + std::string(s) + "'");
}

AxisScale scale_from_string(std::string_view s) {
    if (s == "linear") return AxisScale::linear;
    if (s == "log") return AxisScale::log;
    throw ParseError("scale", "unknown axis scale '" + std::string(s) + "'");
}

ChartAnnotation annotation_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("", "annotation document must be a JSON object");
    if (!doc.contains("type")) throw ParseError("type", "missing required key");

    ChartAnnotation a;
    a.chart_type = chart_type_from_string(require_string(doc["type"], "type"));

    std::optional<std::vector<std::string>> categories_primary;
    std::optional<std::vector<std::string>> categories_other;
    std::optional<bool> stacked_matching;
    std::optional<bool> stacked_other;
    bool saw_main_axes = false;
    bool saw_data = false;

    for (const auto& [key, value] : doc.items()) {
        if (key == "type") continue;
        if (key == "title") {
            a.title = require_string(value, "title");
        } else if (key == "main_axes") {
            saw_main_axes = true;
            if (!value.is_object()) throw ParseError("main_axes", "expected an object");
            bool saw_x = false, saw_y = false;
            for (const auto& [ak, av] : value.items()) {
                if (ak == "x_axis" || ak == "y_axis") {
                    bool is_x = ak == "x_axis";
                    ParsedAxis parsed = parse_axis(av, "main_axes." + ak, is_x);
                    (is_x ? a.x_axis : a.y_axis) = parsed.spec;
                    (is_x ? saw_x : saw_y) = true;
                    bool is_category_axis = is_x == a.value_axis_is_y();
                    if (parsed.categories) {
                        (is_category_axis ? categories_primary : categories_other) =
                            std::move(parsed.categories);
                    }
                } else {
                    a.main_axes_extras[ak] = av;
                }
            }
            if (!saw_x) throw ParseError("main_axes.x_axis", "missing required key");
            if (!saw_y) throw ParseError("main_axes.y_axis", "missing required key");
        } else if (key == "secondary_axis") {
            if (!value.is_object()) throw ParseError("secondary_axis", "expected an object");
            for (const auto& [ak, av] : value.items()) {
                if (ak == "x_axis" || ak == "y_axis") {
                    ParsedAxis parsed = parse_axis(av, "secondary_axis." + ak, ak == "x_axis");
                    a.secondary_axis = parsed.spec;
                } else {
                    a.secondary_axis_extras[ak] = av;
                }
            }
            if (!a.secondary_axis)
                throw ParseError("secondary_axis", "expected an x_axis or y_axis entry");
        } else if (key == "data") {
            saw_data = true;
            if (!value.is_object()) throw ParseError("data", "expected an object");
            for (const auto& [sk, sv] : value.items())
                a.data.set(sk, require_number_list(sv, "data." + sk));
        } else if (key == "colors") {
            if (!value.is_object()) throw ParseError("colors", "expected an object");
            SeriesColors colors;
            for (const auto& [sk, sv] : value.items())
                colors.set(sk, require_string(sv, "colors." + sk));
            a.colors = std::move(colors);
        } else if (key == "legend") {
            a.legend = require_string_list(value, "legend");
        } else if (key == kChartLegend) {
            a.chart_legend_visible = require_bool(value, kChartLegend);
        } else if (key == "grid_visible") {
            a.grid_visible = require_bool(value, "grid_visible");
        } else if (key == kStackedV || key == kStackedH) {
            bool matches = key == a.stacked_key();
            (matches ? stacked_matching : stacked_other) = require_bool(value, key);
        } else if (key == "bands_visible") {
            a.bands_visible = require_bool(value, "bands_visible");
        } else if (key == kThreeD) {
            a.three_d_effect = require_bool(value, kThreeD);
        } else if (key == "scaling_factors") {
            if (!value.is_object()) throw ParseError("scaling_factors", "expected an object");
            SeriesValues factors;
            for (const auto& [sk, sv] : value.items())
                factors.set(sk, require_number_list(sv, "scaling_factors." + sk));
            a.scaling_factors = std::move(factors);
        } else {
            a.extras[key] = value;
        }
    }

    if (!saw_main_axes) throw ParseError("main_axes", "missing required key");
    if (!saw_data) throw ParseError("data", "missing required key");

    // During chart-type rewrites (e.g. the line misleader) patched
    // documents may keep categories / the stacked flag under the previous
    // chart type's location; accept either, preferring the matching one.
    if (categories_primary)
        a.categories = std::move(*categories_primary);
    else if (categories_other)
        a.categories = std::move(*categories_other);
    a.stacked = stacked_matching.value_or(stacked_other.value_or(false));

    check_invariants_or_throw(a);
    return a;
}

ChartAnnotation parse_annotation(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed JSON: ") + e.what());
    }
    return annotation_from_json(doc);
}

json annotation_to_json(const ChartAnnotation& a) {
    json doc = json::object();
    doc["type"] = to_string(a.chart_type);
    if (a.title) doc["title"] = *a.title;

    json main_axes = json::object();
    bool categories_on_x = a.value_axis_is_y();
    main_axes["x_axis"] = axis_to_json(a.x_axis, categories_on_x ? &a.categories : nullptr);
    main_axes["y_axis"] = axis_to_json(a.y_axis, categories_on_x ? nullptr : &a.categories);
    for (const auto& [k, v] : a.main_axes_extras.items()) main_axes[k] = v;
    doc["main_axes"] = std::move(main_axes);

    if (a.secondary_axis) {
        json sec = json::object();
        sec[a.value_axis_key()] = axis_to_json(*a.secondary_axis, nullptr);
        for (const auto& [k, v] : a.secondary_axis_extras.items()) sec[k] = v;
        doc["secondary_axis"] = std::move(sec);
    }

    json data = json::object();
    for (const auto& [name, values] : a.data) {
        json list = json::array();
        for (double v : values) list.push_back(canonical_number(v));
        data[name] = std::move(list);
    }
    doc["data"] = std::move(data);

    if (a.colors) {
        json colors = json::object();
        for (const auto& [name, hex] : *a.colors) colors[name] = hex;
        doc["colors"] = std::move(colors);
    }

    json legend = json::array();
    for (const auto& name : a.legend) legend.push_back(name);
    doc["legend"] = std::move(legend);
    doc[kChartLegend] = a.chart_legend_visible;
    doc["grid_visible"] = a.grid_visible;
    doc["bands_visible"] = a.bands_visible;
    if (a.chart_type != ChartType::line) {
        doc[a.stacked_key()] = a.stacked;
        doc[kThreeD] = a.three_d_effect;
    }
    if (a.scaling_factors) {
        json factors = json::object();
        for (const auto& [name, values] : *a.scaling_factors) {
            json list = json::array();
            for (double v : values) list.push_back(canonical_number(v));
            factors[name] = std::move(list);
        }
        doc["scaling_factors"] = std::move(factors);
    }
    for (const auto& [k, v] : a.extras.items()) doc[k] = v;
    return doc;
}

std::string serialize_annotation(const ChartAnnotation& a) {
    return annotation_to_json(a).dump(2) + "\n";
}

// --- validation ------------------------------------------------------------

namespace {

const std::regex kHexColor("^#[0-9A-Fa-f]{6}$");

void check_axis(const AxisSpec& axis, const std::string& path, std::vector<ValidationIssue>& issues) {
    if (!(axis.axis_range.min_value < axis.axis_range.max_value)) {
        issues.push_back({path + ".axis_range", "empty_range",
                          "min_value must be strictly below max_value"});
    }
    if (axis.scale == AxisScale::log && !(axis.axis_range.min_value > 0)) {
        issues.push_back({path, "log_nonpositive_domain",
                          "log scale requires a strictly positive axis range"});
    }
}

}  // namespace

ValidationReport validate(const ChartAnnotation& a) {
    std::vector<ValidationIssue> issues;

    for (const auto& [name, values] : a.data) {
        if (values.size() != a.categories.size()) {
            issues.push_back({"data." + name, "series_length_mismatch",
                              "series has " + std::to_string(values.size()) + " values for " +
                                  std::to_string(a.categories.size()) + " categories"});
        }
    }

    if (a.colors) {
        for (const auto& [name, hex] : *a.colors) {
            if (!a.data.contains(name))
                issues.push_back({"colors." + name, "unknown_series",
                                  "color entry without a matching data series"});
            if (!std::regex_match(hex, kHexColor))
                issues.push_back({"colors." + name, "bad_hex",
                                  "'" + hex + "' is not a #RRGGBB color"});
        }
        for (const auto& [name, values] : a.data) {
            if (!a.colors->contains(name))
                issues.push_back({"colors." + name, "missing_series",
                                  "data series without a color entry"});
        }
    }

    if (a.scaling_factors) {
        for (const auto& [name, factors] : *a.scaling_factors) {
            const std::vector<double>* values = a.data.find(name);
            if (!values) {
                issues.push_back({"scaling_factors." + name, "unknown_series",
                                  "scaling factors for a series not present in data"});
                continue;
            }
            if (factors.size() != values->size())
                issues.push_back({"scaling_factors." + name, "length_mismatch",
                                  "scaling factor list length differs from the data series"});
            for (std::size_t i = 0; i < factors.size(); ++i) {
                if (!(factors[i] > 0))
                    issues.push_back({"scaling_factors." + name + "[" + std::to_string(i) + "]",
                                      "nonpositive_factor", "scaling factors must be > 0"});
            }
        }
        for (const auto& [name, values] : a.data) {
            if (!a.scaling_factors->contains(name))
                issues.push_back({"scaling_factors." + name, "missing_series",
                                  "data series without a scaling factor list"});
        }
    }

    if (a.chart_type == ChartType::line) {
        if (a.stacked)
            issues.push_back({"type", "line_stacked_conflict", "line charts cannot be stacked"});
        if (a.three_d_effect)
            issues.push_back({"type", "line_three_d_conflict", "line charts cannot use a 3D effect"});
    }

    check_axis(a.x_axis, "main_axes.x_axis", issues);
    check_axis(a.y_axis, "main_axes.y_axis", issues);
    if (a.secondary_axis)
        check_axis(*a.secondary_axis, "secondary_axis." + a.value_axis_key(), issues);

    ValidationReport report;
    report.issues = std::move(issues);
    report.ok = report.issues.empty();
    return report;
}

ValidationReport validate(const ChartAnnotation& a, const std::vector<CsvCell>& table) {
    ValidationReport report = validate(a);

    auto cell_path = [](const std::string& series, std::size_t idx) {
        return "data." + series + "[" + std::to_string(idx) + "]";
    };

    std::set<std::pair<std::string, std::string>> seen;
    for (const CsvCell& cell : table) {
        seen.insert({cell.series, cell.category});
        const std::vector<double>* values = a.data.find(cell.series);
        auto it = std::find(a.categories.begin(), a.categories.end(), cell.category);
        if (!values || it == a.categories.end()) {
            report.issues.push_back({"csv", "csv_unknown_cell",
                                     "table cell (" + cell.category + ", " + cell.series +
                                         ") has no matching annotation cell"});
            continue;
        }
        std::size_t idx = static_cast<std::size_t>(it - a.categories.begin());
        if (idx >= values->size()) continue;  // length mismatch already reported
        if ((*values)[idx] != cell.value) {
            report.issues.push_back({cell_path(cell.series, idx), "csv_mismatch",
                                     "annotation value " + util::format_number((*values)[idx]) +
                                         " differs from table value " +
                                         util::format_number(cell.value)});
        }
    }
    for (const auto& [series, values] : a.data) {
        for (std::size_t i = 0; i < values.size() && i < a.categories.size(); ++i) {
            if (!seen.count({series, a.categories[i]}))
                report.issues.push_back({cell_path(series, i), "csv_missing_cell",
                                         "annotation cell absent from the table"});
        }
    }
    report.ok = report.issues.empty();
    return report;
}

std::vector<CsvCell> parse_csv_table(std::string_view bytes) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    auto end_field = [&] { row.push_back(std::move(field)); field.clear(); };
    auto end_row = [&] {
        end_field();
        if (row.size() > 1 || !row[0].empty()) rows.push_back(row);
        row.clear();
    };
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        char c = bytes[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!field.empty() || !row.empty()) end_row();

    if (rows.empty()) throw ParseError("csv", "empty table");
    const std::vector<std::string>& header = rows.front();
    if (header.size() != 3 || header[0] != "category" || header[1] != "series" ||
        header[2] != "value")
        throw ParseError("csv", "expected header 'category,series,value'");

    std::vector<CsvCell> cells;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3)
            throw ParseError("csv:" + std::to_string(r + 1), "expected 3 fields");
        std::optional<double> v = util::parse_number(rows[r][2]);
        if (!v) throw ParseError("csv:" + std::to_string(r + 1), "value is not a number");
        cells.push_back({rows[r][0], rows[r][1], *v});
    }
    return cells;
}

// --- simplification ----------------------------------------------------------

namespace {

const std::set<std::string> kGeometryKeys = {
    "bbox",        "bboxes",         "bounding_box", "bounding_boxes", "label_coordinates",
    "coordinates", "figure_geometry", "geometry",     "image_size",     "image_index",
    "plot_area",   "canvas",          "dpi",
};

json strip_keys(const json& node, const std::set<std::string>& keys) {
    if (node.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : node.items()) {
            if (keys.count(k)) continue;
            out[k] = strip_keys(v, keys);
        }
        return out;
    }
    if (node.is_array()) {
        json out = json::array();
        for (const auto& v : node) out.push_back(strip_keys(v, keys));
        return out;
    }
    return node;
}

// Reorganizes a flat tabular layout ({"categories": [...], "series":
// [{"name", "values", "color"?}]} or {"data": {...}}) into the native form.
json tabular_to_native(const json& doc) {
    json native = json::object();
    if (!doc.contains("type")) throw ParseError("type", "missing required key");
    native["type"] = doc["type"];
    if (doc.contains("title")) native["title"] = doc["title"];

    ChartType type = chart_type_from_string(require_string(doc["type"], "type"));
    bool value_axis_is_y = type != ChartType::h_bar;

    json data = json::object();
    json colors = json::object();
    if (doc.contains("series") && doc["series"].is_array()) {
        for (const auto& entry : doc["series"]) {
            if (!entry.is_object() || !entry.contains("name") || !entry.contains("values"))
                throw ParseError("series", "series entries need 'name' and 'values'");
            data[entry["name"].get<std::string>()] = entry["values"];
            if (entry.contains("color")) colors[entry["name"].get<std::string>()] = entry["color"];
        }
    } else if (doc.contains("data") && doc["data"].is_object()) {
        data = doc["data"];
        if (doc.contains("colors")) colors = doc["colors"];
    } else {
        throw ParseError("data", "missing mandatory data table");
    }
    if (data.empty()) throw ParseError("data", "missing mandatory data table");

    json categories = doc.value("categories", json::array());

    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const auto& [name, values] : data.items()) {
        for (const auto& v : values) {
            double x = require_number(v, "series." + name);
            if (first) {
                lo = hi = x;
                first = false;
            } else {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        }
    }
    lo = std::min(lo, 0.0);
    if (!(lo < hi)) hi = lo + 1.0;

    json value_axis = {{"axis_range", {{"min_value", canonical_number(lo)}, {"max_value", canonical_number(hi)}}},
                       {"show_axis", true},
                       {"direction", value_axis_is_y ? "bottom-to-top" : "left-to-right"},
                       {"scale", "linear"}};
    json category_axis = {
        {"axis_range", {{"min_value", 0}, {"max_value", canonical_number(std::max<double>(1, categories.size()))}}},
        {"show_axis", true},
        {"direction", value_axis_is_y ? "left-to-right" : "bottom-to-top"},
        {"scale", "linear"},
        {"categories", categories}};
    json main_axes = json::object();
    if (value_axis_is_y) {
        main_axes["x_axis"] = category_axis;
        main_axes["y_axis"] = value_axis;
    } else {
        main_axes["x_axis"] = value_axis;
        main_axes["y_axis"] = category_axis;
    }
    native["main_axes"] = main_axes;
    native["data"] = data;
    if (!colors.empty()) native["colors"] = colors;

    json legend = json::array();
    for (const auto& [name, values] : data.items()) legend.push_back(name);
    native["legend"] = legend;
    native[kChartLegend] = doc.value(kChartLegend, data.size() > 1);
    native["grid_visible"] = doc.value("grid_visible", false);
    native["bands_visible"] = doc.value("bands_visible", false);
    if (type != ChartType::line) {
        std::string stacked_key = type == ChartType::h_bar ? kStackedH : kStackedV;
        native[stacked_key] = doc.value(stacked_key, false);
        native[kThreeD] = doc.value(kThreeD, false);
    }
    return native;
}

}  // namespace

ChartAnnotation simplify(const ChartAnnotation& a, SimplifyMode mode) {
    ChartAnnotation out = a;
    out.extras = strip_keys(out.extras, kGeometryKeys);
    out.main_axes_extras = strip_keys(out.main_axes_extras, kGeometryKeys);
    out.secondary_axis_extras = strip_keys(out.secondary_axis_extras, kGeometryKeys);
    out.x_axis.extras = strip_keys(out.x_axis.extras, kGeometryKeys);
    out.y_axis.extras = strip_keys(out.y_axis.extras, kGeometryKeys);
    if (out.secondary_axis) out.secondary_axis->extras = strip_keys(out.secondary_axis->extras, kGeometryKeys);

    if (mode == SimplifyMode::minimal) {
        out.title.reset();
        out.legend.clear();
        out.chart_legend_visible = false;
        out.grid_visible = false;
        out.bands_visible = false;
        out.extras = json::object();
        out.main_axes_extras = json::object();
        out.secondary_axis_extras = json::object();
        out.x_axis.extras = json::object();
        out.y_axis.extras = json::object();
        if (out.secondary_axis) out.secondary_axis->extras = json::object();
    }
    return out;
}

ChartAnnotation simplify_annotation(std::string_view raw_bytes, SimplifyMode mode) {
    json doc;
    try {
        doc = json::parse(raw_bytes);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("", "unrecognized source layout: expected an object");

    json cleaned = strip_keys(doc, kGeometryKeys);
    ChartAnnotation parsed;
    if (cleaned.contains("main_axes")) {
        parsed = annotation_from_json(cleaned);
    } else if (cleaned.contains("type")) {
        parsed = annotation_from_json(tabular_to_native(cleaned));
    } else {
        throw ParseError("", "unrecognized source layout");
    }
    return simplify(parsed, mode);
}

}  // namespace chartattack

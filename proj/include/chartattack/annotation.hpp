#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartattack {

using json = nlohmann::ordered_json;

enum class ChartType { h_bar, v_bar, line };
enum class AxisDirection { bottom_to_top, top_to_bottom, left_to_right, right_to_left };
enum class AxisScale { linear, log };

std::string to_string(ChartType t);
std::string to_string(AxisDirection d);
std::string to_string(AxisScale s);
ChartType chart_type_from_string(std::string_view s);
AxisDirection direction_from_string(std::string_view s);
AxisScale scale_from_string(std::string_view s);

// Insertion-ordered string-keyed map. Annotation documents treat series
// order as meaningful, so std::map/unordered_map would lose information.
template <typename T>
class OrderedMap {
public:
    using Item = std::pair<std::string, T>;

    bool contains(std::string_view key) const { return find(key) != nullptr; }

    const T* find(std::string_view key) const {
        for (const auto& [k, v] : items_)
            if (k == key) return &v;
        return nullptr;
    }

    T* find(std::string_view key) {
        for (auto& [k, v] : items_)
            if (k == key) return &v;
        return nullptr;
    }

    void set(std::string key, T value) {
        if (T* existing = find(key)) {
            *existing = std::move(value);
        } else {
            items_.emplace_back(std::move(key), std::move(value));
        }
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        out.reserve(items_.size());
        for (const auto& [k, v] : items_) out.push_back(k);
        return out;
    }

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    const Item& at(std::size_t i) const { return items_[i]; }

    bool operator==(const OrderedMap&) const = default;

private:
    std::vector<Item> items_;
};

using SeriesValues = OrderedMap<std::vector<double>>;
using SeriesColors = OrderedMap<std::string>;

struct AxisRange {
    double min_value = 0.0;
    double max_value = 1.0;
    bool operator==(const AxisRange&) const = default;
};

struct AxisSpec {
    AxisRange axis_range;
    bool show_axis = true;
    AxisDirection direction = AxisDirection::bottom_to_top;
    AxisScale scale = AxisScale::linear;
    json extras = json::object();  // unknown keys, re-emitted verbatim
    bool operator==(const AxisSpec&) const = default;
};

// Complete declarative description of one chart. Immutable by convention:
// operations return new values instead of mutating in place.
struct ChartAnnotation {
    ChartType chart_type = ChartType::v_bar;
    std::optional<std::string> title;
    AxisSpec x_axis;
    AxisSpec y_axis;
    std::optional<AxisSpec> secondary_axis;  // value axis overlay (y for v_bar/line, x for h_bar)
    std::vector<std::string> categories;     // serialized under the category axis
    SeriesValues data;
    std::optional<SeriesColors> colors;
    std::vector<std::string> legend;
    bool chart_legend_visible = false;
    bool grid_visible = false;
    bool bands_visible = false;
    bool stacked = false;
    bool three_d_effect = false;
    std::optional<SeriesValues> scaling_factors;
    json extras = json::object();
    json main_axes_extras = json::object();
    json secondary_axis_extras = json::object();

    bool operator==(const ChartAnnotation&) const = default;

    bool value_axis_is_y() const { return chart_type != ChartType::h_bar; }
    const AxisSpec& value_axis() const { return value_axis_is_y() ? y_axis : x_axis; }
    AxisSpec& value_axis() { return value_axis_is_y() ? y_axis : x_axis; }
    const AxisSpec& category_axis() const { return value_axis_is_y() ? x_axis : y_axis; }
    AxisSpec& category_axis() { return value_axis_is_y() ? x_axis : y_axis; }
    // document key of the value axis ("y_axis" / "x_axis")
    std::string value_axis_key() const { return value_axis_is_y() ? "y_axis" : "x_axis"; }
    std::string category_axis_key() const { return value_axis_is_y() ? "x_axis" : "y_axis"; }
    std::string stacked_key() const {
        return chart_type == ChartType::h_bar ? "Stacked horizontal bar chart"
                                              : "Stacked vertical bar chart";
    }
};

struct ValidationIssue {
    std::string path;
    std::string code;
    std::string message;
    bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
    bool ok = true;
    std::vector<ValidationIssue> issues;
};

struct CsvCell {
    std::string category;
    std::string series;
    double value = 0.0;
};

// --- parsing / serialization -------------------------------------------

// Parses a UTF-8 annotation document; throws ParseError on malformed
// input, type mismatches and invariant violations.
ChartAnnotation parse_annotation(std::string_view bytes);

// Typed tree -> document tree with canonical key order and number forms.
json annotation_to_json(const ChartAnnotation& a);
ChartAnnotation annotation_from_json(const json& doc);

// Canonical JSON number: integral doubles become integers so that e.g.
// 5.0 always serializes as 5.
json canonical_number(double v);

// Canonical bytes: stable key order, canonical numbers, 2-space indent,
// trailing newline. parse(serialize(a)) == a on typed fields.
std::string serialize_annotation(const ChartAnnotation& a);

// --- validation ----------------------------------------------------------

ValidationReport validate(const ChartAnnotation& a);
// Cross-checks annotation data against (category, series, value) triples.
ValidationReport validate(const ChartAnnotation& a, const std::vector<CsvCell>& table);

// Parses the `category,series,value` cross-check format.
std::vector<CsvCell> parse_csv_table(std::string_view bytes);

// --- simplification ------------------------------------------------------

enum class SimplifyMode {
    core,     // drop geometry/bounding boxes, keep title/legend/format flags
    minimal,  // additionally drop titles, legends, grids, bands (retrieval encoding)
};

// Lowers a raw source-dataset document to a clean annotation. Accepts the
// native layout (with stray geometry keys) and a tabular layout with a
// `series` list; throws ParseError on unrecognized layouts.
ChartAnnotation simplify_annotation(std::string_view raw_bytes,
                                    SimplifyMode mode = SimplifyMode::core);

// Same reduction applied to an already-parsed annotation.
ChartAnnotation simplify(const ChartAnnotation& a, SimplifyMode mode);

}  // namespace chartattack

#include "chartattack/patch.hpp"

#include <set>

#include "chartattack/errors.hpp"

namespace chartattack {

namespace {

// Paths whose object children may merge key-by-key. Everything else —
// dynamic maps, lists, scalars, extras — replaces wholesale.
const std::set<std::string> kStructuralContainers = {
    "",
    "main_axes",
    "main_axes.x_axis",
    "main_axes.y_axis",
    "main_axes.x_axis.axis_range",
    "main_axes.y_axis.axis_range",
    "secondary_axis",
    "secondary_axis.x_axis",
    "secondary_axis.y_axis",
    "secondary_axis.x_axis.axis_range",
    "secondary_axis.y_axis.axis_range",
};

std::string child_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

json strip_nulls(const json& node) {
    if (node.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : node.items()) {
            if (v.is_null()) continue;
            out[k] = strip_nulls(v);
        }
        return out;
    }
    return node;
}

json merge_at(const json& base, const json& patch, const std::string& path) {
    if (!kStructuralContainers.count(path)) return patch;
    if (!patch.is_object()) {
        if (path.empty()) throw PatchError("", "patch root must be an object");
        return patch;
    }
    json out = base.is_object() ? base : json::object();
    for (const auto& [key, value] : patch.items()) {
        if (value.is_null()) {
            out.erase(key);
            continue;
        }
        std::string cp = child_path(path, key);
        if (out.contains(key)) {
            out[key] = merge_at(out[key], value, cp);
        } else {
            out[key] = kStructuralContainers.count(cp) ? strip_nulls(value) : value;
        }
    }
    return out;
}

}  // namespace

json merge_annotation_tree(const json& base, const json& patch) {
    return merge_at(base, patch, "");
}

ChartAnnotation apply_patch(const ChartAnnotation& a, const Patch& p) {
    json merged = merge_annotation_tree(annotation_to_json(a), p.tree);
    try {
        return annotation_from_json(merged);
    } catch (const ParseError& e) {
        throw PatchError(e.path(), std::string("patched annotation is invalid: ") + e.what());
    }
}

namespace {

json series_map_to_json(const SeriesValues& m) {
    json out = json::object();
    for (const auto& [name, values] : m) {
        json list = json::array();
        for (double v : values) list.push_back(canonical_number(v));
        out[name] = std::move(list);
    }
    return out;
}

json color_map_to_json(const SeriesColors& m) {
    json out = json::object();
    for (const auto& [name, hex] : m) out[name] = hex;
    return out;
}

json axis_spec_to_json(const AxisSpec& axis) {
    json j = json::object();
    j["axis_range"] = {{"min_value", canonical_number(axis.axis_range.min_value)},
                       {"max_value", canonical_number(axis.axis_range.max_value)}};
    j["show_axis"] = axis.show_axis;
    j["direction"] = to_string(axis.direction);
    j["scale"] = to_string(axis.scale);
    for (const auto& [k, v] : axis.extras.items()) j[k] = v;
    return j;
}

json diff_axis(const AxisSpec& a, const AxisSpec& b) {
    json d = json::object();
    json range = json::object();
    if (a.axis_range.min_value != b.axis_range.min_value)
        range["min_value"] = canonical_number(b.axis_range.min_value);
    if (a.axis_range.max_value != b.axis_range.max_value)
        range["max_value"] = canonical_number(b.axis_range.max_value);
    if (!range.empty()) d["axis_range"] = std::move(range);
    if (a.show_axis != b.show_axis) d["show_axis"] = b.show_axis;
    if (a.direction != b.direction) d["direction"] = to_string(b.direction);
    if (a.scale != b.scale) d["scale"] = to_string(b.scale);
    for (const auto& [k, v] : b.extras.items()) {
        if (!a.extras.contains(k) || a.extras[k] != v) d[k] = v;
    }
    for (const auto& [k, v] : a.extras.items()) {
        if (!b.extras.contains(k)) d[k] = nullptr;
    }
    return d;
}

void diff_extras(const json& a, const json& b, json& out) {
    for (const auto& [k, v] : b.items()) {
        if (!a.contains(k) || a[k] != v) out[k] = v;
    }
    for (const auto& [k, v] : a.items()) {
        if (!b.contains(k)) out[k] = nullptr;
    }
}

}  // namespace

Patch diff_patch(const ChartAnnotation& a, const ChartAnnotation& b) {
    Patch p;
    json& tree = p.tree;

    if (a.chart_type != b.chart_type) tree["type"] = to_string(b.chart_type);
    if (a.title != b.title) {
        if (b.title)
            tree["title"] = *b.title;
        else
            tree["title"] = nullptr;
    }

    json main_axes = json::object();
    json dx = diff_axis(a.x_axis, b.x_axis);
    json dy = diff_axis(a.y_axis, b.y_axis);
    if (a.categories != b.categories) {
        json cats = json::array();
        for (const auto& c : b.categories) cats.push_back(c);
        (b.category_axis_key() == "x_axis" ? dx : dy)["categories"] = std::move(cats);
    }
    if (!dx.empty()) main_axes["x_axis"] = std::move(dx);
    if (!dy.empty()) main_axes["y_axis"] = std::move(dy);
    diff_extras(a.main_axes_extras, b.main_axes_extras, main_axes);
    if (!main_axes.empty()) tree["main_axes"] = std::move(main_axes);

    bool axis_key_changed = a.value_axis_key() != b.value_axis_key();
    if (b.secondary_axis && (!a.secondary_axis || axis_key_changed)) {
        json sec = json::object();
        sec[b.value_axis_key()] = axis_spec_to_json(*b.secondary_axis);
        for (const auto& [k, v] : b.secondary_axis_extras.items()) sec[k] = v;
        tree["secondary_axis"] = std::move(sec);
    } else if (a.secondary_axis && !b.secondary_axis) {
        tree["secondary_axis"] = nullptr;
    } else if (a.secondary_axis && b.secondary_axis) {
        json sec = json::object();
        json ds = diff_axis(*a.secondary_axis, *b.secondary_axis);
        if (!ds.empty()) sec[b.value_axis_key()] = std::move(ds);
        diff_extras(a.secondary_axis_extras, b.secondary_axis_extras, sec);
        if (!sec.empty()) tree["secondary_axis"] = std::move(sec);
    }

    if (!(a.data == b.data)) tree["data"] = series_map_to_json(b.data);
    if (a.colors != b.colors) {
        if (b.colors)
            tree["colors"] = color_map_to_json(*b.colors);
        else
            tree["colors"] = nullptr;
    }
    if (a.legend != b.legend) {
        json legend = json::array();
        for (const auto& name : b.legend) legend.push_back(name);
        tree["legend"] = std::move(legend);
    }
    if (a.chart_legend_visible != b.chart_legend_visible)
        tree["Chart legend"] = b.chart_legend_visible;
    if (a.grid_visible != b.grid_visible) tree["grid_visible"] = b.grid_visible;
    if (a.bands_visible != b.bands_visible) tree["bands_visible"] = b.bands_visible;
    if (a.stacked != b.stacked) {
        // when the target is a line chart the flag keeps the source key
        std::string key = b.chart_type == ChartType::line ? a.stacked_key() : b.stacked_key();
        tree[key] = b.stacked;
    }
    if (a.three_d_effect != b.three_d_effect) tree["3D effect"] = b.three_d_effect;
    if (a.scaling_factors != b.scaling_factors) {
        if (b.scaling_factors)
            tree["scaling_factors"] = series_map_to_json(*b.scaling_factors);
        else
            tree["scaling_factors"] = nullptr;
    }
    diff_extras(a.extras, b.extras, tree);
    return p;
}

}  // namespace chartattack

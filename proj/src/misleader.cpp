#include "chartattack/misleader.hpp"

#include <algorithm>
#include <cmath>

#include "chartattack/color.hpp"
#include "chartattack/errors.hpp"

namespace chartattack {

std::string to_string(MisleaderKind k) {
    switch (k) {
        case MisleaderKind::dual_axis: return "dual_axis";
        case MisleaderKind::inverted_axis: return "inverted_axis";
        case MisleaderKind::log_scale: return "inappropriate_use_of_log_scale";
        case MisleaderKind::line_misuse: return "inappropriate_use_of_line";
        case MisleaderKind::stacked_misuse: return "inappropriate_use_of_stacked";
        case MisleaderKind::three_d: return "3d";
        case MisleaderKind::color_scheme: return "ineffective_color_scheme";
        case MisleaderKind::misrepresentation: return "misrepresentation";
    }
    return "inverted_axis";
}

std::optional<MisleaderKind> try_misleader_from_string(std::string_view s) {
    for (MisleaderKind k : kAllMisleaders)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

MisleaderKind misleader_from_string(std::string_view s) {
    if (auto k = try_misleader_from_string(s)) return *k;
    throw ParseError("technique", "unknown misleading technique '" + std::string(s) + "'");
}

bool type_compatible(ChartType type, MisleaderKind kind) {
    switch (kind) {
        case MisleaderKind::dual_axis:
        case MisleaderKind::inverted_axis:
        case MisleaderKind::log_scale:
        case MisleaderKind::misrepresentation:
            return true;  // all three chart types
        case MisleaderKind::stacked_misuse:
        case MisleaderKind::three_d:
        case MisleaderKind::color_scheme:
            return type != ChartType::line;
        case MisleaderKind::line_misuse:
            return type == ChartType::v_bar;
    }
    return false;
}

namespace {

bool all_values_positive(const ChartAnnotation& a) {
    for (const auto& [name, values] : a.data)
        for (double v : values)
            if (!(v > 0)) return false;
    return true;
}

// Returns "" when the kind is applicable, otherwise the failed condition.
std::string structural_block(const ChartAnnotation& a, MisleaderKind kind) {
    if (!type_compatible(a.chart_type, kind))
        return "not applicable to chart type " + to_string(a.chart_type);
    switch (kind) {
        case MisleaderKind::dual_axis:
            if (a.data.size() != 2) return "requires exactly two data series";
            break;
        case MisleaderKind::log_scale:
            if (a.value_axis().scale != AxisScale::linear) return "value axis is already log-scaled";
            if (!all_values_positive(a)) return "requires strictly positive data values";
            break;
        case MisleaderKind::stacked_misuse:
            if (a.stacked) return "chart is already stacked";
            break;
        case MisleaderKind::three_d:
            if (a.three_d_effect) return "3D effect is already enabled";
            break;
        case MisleaderKind::line_misuse:
            if (a.stacked) return "stacked charts cannot become line charts";
            if (a.three_d_effect) return "3D charts cannot become line charts";
            break;
        default:
            break;
    }
    return "";
}

void require_compatible(const ChartAnnotation& a, MisleaderKind kind) {
    std::string block = structural_block(a, kind);
    if (!block.empty()) throw IncompatibleError(to_string(kind), block);
}

MisleaderApplication finish(const ChartAnnotation& a, MisleaderKind kind,
                            const ChartAnnotation& modified) {
    MisleaderApplication app;
    app.kind = kind;
    app.patch = diff_patch(a, modified);
    app.provenance = Provenance::rule_based;
    return app;
}

AxisDirection flipped(AxisDirection d) {
    switch (d) {
        case AxisDirection::bottom_to_top: return AxisDirection::top_to_bottom;
        case AxisDirection::top_to_bottom: return AxisDirection::bottom_to_top;
        case AxisDirection::left_to_right: return AxisDirection::right_to_left;
        case AxisDirection::right_to_left: return AxisDirection::left_to_right;
    }
    return d;
}

}  // namespace

std::set<MisleaderKind> compatible_misleaders(const ChartAnnotation& a) {
    std::set<MisleaderKind> out;
    for (MisleaderKind k : kAllMisleaders)
        if (structural_block(a, k).empty()) out.insert(k);
    return out;
}

MisleaderApplication apply_flag_misleader(const ChartAnnotation& a, MisleaderKind kind) {
    require_compatible(a, kind);
    ChartAnnotation modified = a;
    switch (kind) {
        case MisleaderKind::inverted_axis:
            modified.value_axis().direction = flipped(a.value_axis().direction);
            break;
        case MisleaderKind::log_scale:
            modified.value_axis().scale = AxisScale::log;
            // keep the domain legal under the log invariant
            if (!(modified.value_axis().axis_range.min_value > 0)) {
                double lo = 1.0;
                for (const auto& [name, values] : a.data)
                    for (double v : values) lo = std::min(lo, v);
                modified.value_axis().axis_range.min_value = std::min(lo, 1.0);
            }
            break;
        case MisleaderKind::three_d:
            modified.three_d_effect = true;
            break;
        case MisleaderKind::line_misuse:
            modified.chart_type = ChartType::line;
            break;
        default:
            throw IncompatibleError(to_string(kind), "not a single-flag technique");
    }
    return finish(a, kind, modified);
}

MisleaderApplication apply_dual_axis(const ChartAnnotation& a, const MisleaderConfig& cfg) {
    require_compatible(a, MisleaderKind::dual_axis);

    const auto& [second_name, second_values] = a.data.at(1);
    double lo = second_values.empty() ? 0.0 : second_values[0];
    double hi = lo;
    for (double v : second_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double span = hi - lo;
    double pad = span > 0 ? span * cfg.dual_axis_padding
                          : std::max(std::fabs(hi) * cfg.dual_axis_padding, 1.0);
    double padded_lo = lo - pad;
    if (lo >= 0) padded_lo = std::max(0.0, padded_lo);
    double padded_hi = hi + pad;

    ChartAnnotation modified = a;
    AxisSpec secondary;
    secondary.axis_range = {padded_lo, padded_hi};
    secondary.show_axis = true;
    secondary.direction = a.value_axis_is_y() ? AxisDirection::bottom_to_top
                                              : AxisDirection::left_to_right;
    secondary.scale = AxisScale::linear;
    modified.secondary_axis = secondary;
    if (a.stacked) modified.stacked = false;
    return finish(a, MisleaderKind::dual_axis, modified);
}

MisleaderApplication apply_stacked_misuse(const ChartAnnotation& a, const MisleaderConfig& cfg) {
    require_compatible(a, MisleaderKind::stacked_misuse);

    // every (series, category) value becomes one stack layer of a single
    // combined bar; single-series charts keep plain category names
    ChartAnnotation modified = a;
    SeriesValues new_data;
    for (const auto& [series, values] : a.data) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::string layer = a.data.size() == 1
                                    ? a.categories[i]
                                    : series + cfg.stacked_layer_separator + a.categories[i];
            while (new_data.contains(layer)) layer += "'";
            new_data.set(layer, {values[i]});
        }
    }
    std::vector<std::string> layer_names = new_data.keys();
    std::vector<std::string> palette = distinct_palette(layer_names.size());
    SeriesColors new_colors;
    for (std::size_t i = 0; i < layer_names.size(); ++i) new_colors.set(layer_names[i], palette[i]);

    modified.data = std::move(new_data);
    modified.categories = {""};
    modified.colors = std::move(new_colors);
    modified.legend = layer_names;
    modified.chart_legend_visible = true;
    modified.stacked = true;
    if (modified.scaling_factors) modified.scaling_factors.reset();
    return finish(a, MisleaderKind::stacked_misuse, modified);
}

MisleaderApplication apply_color_scheme(const ChartAnnotation& a, Rng& rng) {
    require_compatible(a, MisleaderKind::color_scheme);

    std::string base = a.colors && !a.colors->empty() ? a.colors->at(0).second
                                                      : default_palette().front();
    std::vector<std::string> names = a.data.keys();
    std::vector<std::string> variants = near_color_variations(base, names.size(), rng);

    ChartAnnotation modified = a;
    SeriesColors new_colors;
    for (std::size_t i = 0; i < names.size(); ++i) new_colors.set(names[i], variants[i]);
    modified.colors = std::move(new_colors);
    return finish(a, MisleaderKind::color_scheme, modified);
}

MisleaderApplication apply_misrepresentation(const ChartAnnotation& a, Rng& rng,
                                             const MisleaderConfig& cfg) {
    require_compatible(a, MisleaderKind::misrepresentation);

    double shrink_mass = cfg.shrink_hi - cfg.shrink_lo;
    double grow_mass = cfg.grow_hi - cfg.grow_lo;
    auto draw_factor = [&] {
        bool shrink = rng.next_double() < shrink_mass / (shrink_mass + grow_mass);
        double f = shrink ? rng.uniform(cfg.shrink_lo, cfg.shrink_hi)
                          : rng.uniform(cfg.grow_lo, cfg.grow_hi);
        // three decimals keep the serialized form short and stable
        return std::round(f * 1000.0) / 1000.0;
    };

    ChartAnnotation modified = a;
    SeriesValues factors;
    for (const auto& [series, values] : a.data) {
        std::vector<double> fs(values.size());
        for (double& f : fs) f = draw_factor();
        factors.set(series, std::move(fs));
    }
    modified.scaling_factors = std::move(factors);
    modified.value_axis().show_axis = false;
    return finish(a, MisleaderKind::misrepresentation, modified);
}

MisleaderApplication apply(const ChartAnnotation& a, MisleaderKind kind, uint64_t seed,
                           const MisleaderConfig& cfg) {
    Rng rng(seed);
    switch (kind) {
        case MisleaderKind::inverted_axis:
        case MisleaderKind::log_scale:
        case MisleaderKind::three_d:
        case MisleaderKind::line_misuse:
            return apply_flag_misleader(a, kind);
        case MisleaderKind::dual_axis:
            return apply_dual_axis(a, cfg);
        case MisleaderKind::stacked_misuse:
            return apply_stacked_misuse(a, cfg);
        case MisleaderKind::color_scheme:
            return apply_color_scheme(a, rng);
        case MisleaderKind::misrepresentation:
            return apply_misrepresentation(a, rng, cfg);
    }
    throw IncompatibleError(to_string(kind), "unknown technique");
}

}  // namespace chartattack

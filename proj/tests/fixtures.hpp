#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chartattack/annotation.hpp"
#include "chartattack/color.hpp"
#include "chartattack/rng.hpp"

namespace fixtures {

using chartattack::AxisDirection;
using chartattack::AxisScale;
using chartattack::ChartAnnotation;
using chartattack::ChartType;
using chartattack::Rng;

inline const char* kMinimalVBar = R"({
  "type": "v_bar",
  "main_axes": {
    "x_axis": {
      "axis_range": {"min_value": 0, "max_value": 2},
      "categories": ["2010", "2011"]
    },
    "y_axis": {
      "axis_range": {"min_value": 0, "max_value": 100}
    }
  },
  "data": {"exports": [40, 70]}
})";

inline ChartAnnotation make_v_bar(std::size_t nseries = 1, std::size_t ncat = 3) {
    ChartAnnotation a;
    a.chart_type = ChartType::v_bar;
    a.x_axis.axis_range = {0, static_cast<double>(ncat)};
    a.x_axis.direction = AxisDirection::left_to_right;
    a.y_axis.axis_range = {0, 100};
    a.y_axis.direction = AxisDirection::bottom_to_top;
    for (std::size_t c = 0; c < ncat; ++c) a.categories.push_back("c" + std::to_string(c));
    chartattack::SeriesColors colors;
    for (std::size_t s = 0; s < nseries; ++s) {
        std::string name = "s" + std::to_string(s);
        std::vector<double> values;
        for (std::size_t c = 0; c < ncat; ++c)
            values.push_back(10.0 + 7.0 * static_cast<double>(s) + 11.0 * static_cast<double>(c));
        a.data.set(name, values);
        colors.set(name, chartattack::default_palette()[s % 10]);
        a.legend.push_back(name);
    }
    a.colors = colors;
    a.chart_legend_visible = nseries > 1;
    return a;
}

inline ChartAnnotation make_h_bar(std::size_t nseries = 1, std::size_t ncat = 3) {
    ChartAnnotation a = make_v_bar(nseries, ncat);
    a.chart_type = ChartType::h_bar;
    std::swap(a.x_axis, a.y_axis);
    a.x_axis.direction = AxisDirection::left_to_right;
    a.y_axis.direction = AxisDirection::bottom_to_top;
    return a;
}

inline ChartAnnotation make_line(std::size_t nseries = 1, std::size_t ncat = 4) {
    ChartAnnotation a = make_v_bar(nseries, ncat);
    a.chart_type = ChartType::line;
    return a;
}

// Valid annotation with randomized structure; by default keeps every
// value strictly positive so all misleaders stay in play.
inline ChartAnnotation random_annotation(Rng& rng, bool allow_nonpositive = true) {
    ChartAnnotation a;
    double type_roll = rng.next_double();
    a.chart_type = type_roll < 0.4 ? ChartType::v_bar
                   : type_roll < 0.75 ? ChartType::h_bar
                                      : ChartType::line;
    std::size_t ncat = 1 + static_cast<std::size_t>(rng.below(6));
    std::size_t nseries = 1 + static_cast<std::size_t>(rng.below(4));

    for (std::size_t c = 0; c < ncat; ++c) a.categories.push_back("cat" + std::to_string(c));

    bool nonpositive = allow_nonpositive && rng.next_double() < 0.15;
    double max_v = 0;
    for (std::size_t s = 0; s < nseries; ++s) {
        std::vector<double> values;
        for (std::size_t c = 0; c < ncat; ++c) {
            double v = std::round(rng.uniform(1.0, 250.0) * 100.0) / 100.0;
            if (nonpositive && rng.next_double() < 0.3) v = rng.next_double() < 0.5 ? 0.0 : -v;
            values.push_back(v);
            max_v = std::max(max_v, std::fabs(v));
        }
        a.data.set("series" + std::to_string(s), values);
    }

    bool value_is_y = a.chart_type != ChartType::h_bar;
    chartattack::AxisSpec& value_axis = value_is_y ? a.y_axis : a.x_axis;
    chartattack::AxisSpec& cat_axis = value_is_y ? a.x_axis : a.y_axis;
    value_axis.axis_range = {nonpositive ? -300.0 : 0.0, std::max(max_v * 1.2, 10.0)};
    value_axis.direction = value_is_y ? AxisDirection::bottom_to_top : AxisDirection::left_to_right;
    cat_axis.axis_range = {0, static_cast<double>(ncat)};
    cat_axis.direction = value_is_y ? AxisDirection::left_to_right : AxisDirection::bottom_to_top;

    if (rng.next_double() < 0.7) {
        chartattack::SeriesColors colors;
        std::size_t i = 0;
        for (const auto& [name, values] : a.data)
            colors.set(name, chartattack::default_palette()[i++ % 10]);
        a.colors = colors;
    }
    for (const auto& [name, values] : a.data) a.legend.push_back(name);
    a.chart_legend_visible = rng.next_double() < 0.5;
    a.grid_visible = rng.next_double() < 0.5;
    a.bands_visible = rng.next_double() < 0.3;
    if (a.chart_type != ChartType::line) {
        a.stacked = rng.next_double() < 0.25;
        a.three_d_effect = !a.stacked && rng.next_double() < 0.2;
    }
    if (rng.next_double() < 0.5) a.title = "chart " + std::to_string(rng.below(1000));
    if (rng.next_double() < 0.3) a.extras["source_note"] = "synthetic";
    return a;
}

inline std::vector<double> sorted_data_values(const ChartAnnotation& a) {
    std::vector<double> out;
    for (const auto& [name, values] : a.data) out.insert(out.end(), values.begin(), values.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fixtures

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chartattack/rng.hpp"

namespace chartattack {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// h in degrees [0, 360), s and l in [0, 1]
struct Hsl {
    double h = 0, s = 0, l = 0;
};

Rgb parse_hex_color(std::string_view hex);  // throws ParseError on bad input
std::string to_hex(Rgb c);                  // lowercase "#rrggbb"
Hsl rgb_to_hsl(Rgb c);
Rgb hsl_to_rgb(Hsl c);

// circular distance between two hues, in degrees [0, 180]
double hue_distance(double a, double b);

// n distinct, well-separated colors (stacked-misuse layer palette).
std::vector<std::string> distinct_palette(std::size_t n);

struct ColorVariationConfig {
    double max_hue_delta_deg = 18.0;
    double max_lightness_delta = 0.12;
    double min_separation_hue_deg = 2.0;
    double min_separation_lightness = 0.02;
};

// n near-base variants: pairwise distinct hex strings, each within the
// configured hue/lightness deltas of `base_hex`, none equal to the base.
std::vector<std::string> near_color_variations(std::string_view base_hex, std::size_t n,
                                               Rng& rng, const ColorVariationConfig& cfg = {});

// default series palette for charts without explicit colors
const std::vector<std::string>& default_palette();

}  // namespace chartattack

#include "chartattack/color.hpp"

#include <algorithm>
#include <cmath>

#include "chartattack/errors.hpp"

namespace chartattack {

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

double wrap_hue(double h) {
    h = std::fmod(h, 360.0);
    if (h < 0) h += 360.0;
    return h;
}

}  // namespace

Rgb parse_hex_color(std::string_view hex) {
    if (hex.size() != 7 || hex[0] != '#') throw ParseError("", "expected #RRGGBB color");
    int v[6];
    for (int i = 0; i < 6; ++i) {
        v[i] = hex_digit(hex[i + 1]);
        if (v[i] < 0) throw ParseError("", "expected #RRGGBB color");
    }
    return {static_cast<uint8_t>(v[0] * 16 + v[1]), static_cast<uint8_t>(v[2] * 16 + v[3]),
            static_cast<uint8_t>(v[4] * 16 + v[5])};
}

std::string to_hex(Rgb c) {
    static const char* digits = "0123456789abcdef";
    std::string out = "#......";
    out[1] = digits[c.r >> 4];
    out[2] = digits[c.r & 15];
    out[3] = digits[c.g >> 4];
    out[4] = digits[c.g & 15];
    out[5] = digits[c.b >> 4];
    out[6] = digits[c.b & 15];
    return out;
}

Hsl rgb_to_hsl(Rgb c) {
    double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    double l = (mx + mn) / 2.0;
    if (mx == mn) return {0.0, 0.0, l};
    double d = mx - mn;
    double s = l > 0.5 ? d / (2.0 - mx - mn) : d / (mx + mn);
    double h;
    if (mx == r)
        h = (g - b) / d + (g < b ? 6.0 : 0.0);
    else if (mx == g)
        h = (b - r) / d + 2.0;
    else
        h = (r - g) / d + 4.0;
    return {wrap_hue(h * 60.0), s, l};
}

Rgb hsl_to_rgb(Hsl c) {
    double h = wrap_hue(c.h) / 360.0;
    double s = std::clamp(c.s, 0.0, 1.0);
    double l = std::clamp(c.l, 0.0, 1.0);
    auto hue_to_channel = [](double p, double q, double t) {
        if (t < 0) t += 1;
        if (t > 1) t -= 1;
        if (t < 1.0 / 6) return p + (q - p) * 6 * t;
        if (t < 1.0 / 2) return q;
        if (t < 2.0 / 3) return p + (q - p) * (2.0 / 3 - t) * 6;
        return p;
    };
    double r, g, b;
    if (s == 0) {
        r = g = b = l;
    } else {
        double q = l < 0.5 ? l * (1 + s) : l + s - l * s;
        double p = 2 * l - q;
        r = hue_to_channel(p, q, h + 1.0 / 3);
        g = hue_to_channel(p, q, h);
        b = hue_to_channel(p, q, h - 1.0 / 3);
    }
    auto to_byte = [](double x) {
        return static_cast<uint8_t>(std::clamp(std::lround(x * 255.0), 0L, 255L));
    };
    return {to_byte(r), to_byte(g), to_byte(b)};
}

double hue_distance(double a, double b) {
    double d = std::fabs(wrap_hue(a) - wrap_hue(b));
    return std::min(d, 360.0 - d);
}

const std::vector<std::string>& default_palette() {
    static const std::vector<std::string> palette = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    };
    return palette;
}

std::vector<std::string> distinct_palette(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // evenly spaced hues with two lightness rows for large n
        double h = 360.0 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1));
        double l = (i % 2 == 0) ? 0.45 : 0.62;
        out.push_back(to_hex(hsl_to_rgb({h, 0.65, l})));
    }
    // guard against quantization collisions for very large n
    for (std::size_t i = 1; i < out.size(); ++i) {
        while (std::find(out.begin(), out.begin() + static_cast<long>(i), out[i]) !=
               out.begin() + static_cast<long>(i)) {
            Rgb c = parse_hex_color(out[i]);
            c.b = static_cast<uint8_t>(c.b + 1);
            out[i] = to_hex(c);
        }
    }
    return out;
}

std::vector<std::string> near_color_variations(std::string_view base_hex, std::size_t n, Rng& rng,
                                               const ColorVariationConfig& cfg) {
    Hsl base = rgb_to_hsl(parse_hex_color(base_hex));
    std::string base_lower = to_hex(parse_hex_color(base_hex));

    std::vector<Hsl> picked;
    std::vector<std::string> out;
    auto separated = [&](const Hsl& c) {
        for (const Hsl& p : picked) {
            if (hue_distance(c.h, p.h) < cfg.min_separation_hue_deg &&
                std::fabs(c.l - p.l) < cfg.min_separation_lightness)
                return false;
        }
        return true;
    };

    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            Hsl c{wrap_hue(base.h + rng.uniform(-cfg.max_hue_delta_deg, cfg.max_hue_delta_deg)),
                  base.s,
                  std::clamp(base.l + rng.uniform(-cfg.max_lightness_delta, cfg.max_lightness_delta),
                             0.04, 0.96)};
            std::string hex = to_hex(hsl_to_rgb(c));
            if (hex == base_lower || !separated(c)) continue;
            if (std::find(out.begin(), out.end(), hex) != out.end()) continue;
            picked.push_back(c);
            out.push_back(hex);
            placed = true;
        }
        if (!placed) {
            // deterministic fallback: spread across the allowed box
            double span = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) * 2.0 - 1.0 : 1.0;
            Hsl c{wrap_hue(base.h + span * cfg.max_hue_delta_deg), base.s,
                  std::clamp(base.l + span * cfg.max_lightness_delta, 0.04, 0.96)};
            std::string hex = to_hex(hsl_to_rgb(c));
            while (hex == base_lower || std::find(out.begin(), out.end(), hex) != out.end()) {
                Rgb rgb = parse_hex_color(hex);
                rgb.g = static_cast<uint8_t>(rgb.g + 1);
                hex = to_hex(rgb);
            }
            out.push_back(hex);
            picked.push_back(c);
        }
    }
    return out;
}

}  // namespace chartattack

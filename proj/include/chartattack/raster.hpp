#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chartattack/render.hpp"

namespace chartattack::render {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgba;  // row-major, 4 bytes per pixel

    uint8_t* px(int x, int y) { return rgba.data() + (static_cast<std::size_t>(y) * width + x) * 4; }
    const uint8_t* px(int x, int y) const {
        return rgba.data() + (static_cast<std::size_t>(y) * width + x) * 4;
    }
};

// Paints the SVG subset produced by render_svg (rect, line, polyline,
// polygon, text) into an RGBA buffer at dpi/96 scale. Throws RenderError
// on documents outside that subset.
Image rasterize_svg(std::string_view svg, const RenderConfig& cfg = {});

// Lossless PNG bytes (8-bit RGBA, zlib-compressed).
std::string encode_png(const Image& img);

// render -> rasterize -> encode in one step.
std::string rasterize(std::string_view svg, const RenderConfig& cfg = {});
std::string render_png(const ChartAnnotation& a, const RenderConfig& cfg = {});

}  // namespace chartattack::render

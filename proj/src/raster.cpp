#include "chartattack/raster.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>

#include "chartattack/errors.hpp"
#include "chartattack/kernels.hpp"

namespace chartattack::render {

namespace {

#include "font8x16.inc"

constexpr int kFontCellH = 16;
constexpr int kFontBaseline = 13;
constexpr int kFontAdvance = 7;
constexpr int kFontNativePx = 12;  // table was sampled at this size

struct Rgba {
    uint8_t r = 0, g = 0, b = 0, a = 255;
};

Rgba parse_color(std::string_view s, double opacity) {
    Rgba c;
    if (s.size() == 7 && s[0] == '#') {
        auto hx = [&](int i) {
            char ch = s[i];
            if (ch >= '0' && ch <= '9') return ch - '0';
            if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
            if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
            throw RenderError("", "bad color in SVG: " + std::string(s));
        };
        c.r = static_cast<uint8_t>(hx(1) * 16 + hx(2));
        c.g = static_cast<uint8_t>(hx(3) * 16 + hx(4));
        c.b = static_cast<uint8_t>(hx(5) * 16 + hx(6));
    } else {
        throw RenderError("", "unsupported color in SVG: " + std::string(s));
    }
    c.a = static_cast<uint8_t>(std::lround(std::clamp(opacity, 0.0, 1.0) * 255.0));
    return c;
}

class Painter {
public:
    Painter(Image& img) : img_(img) {}

    void blend_px(int x, int y, const Rgba& c, double coverage) {
        if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
        double a = c.a / 255.0 * coverage;
        if (a <= 0.0) return;
        uint8_t eff = static_cast<uint8_t>(std::lround(std::clamp(a, 0.0, 1.0) * 255.0));
        if (eff == 0) return;
        uint8_t rgba[4] = {c.r, c.g, c.b, eff};
        kernels::blend_row(img_.px(x, y), 1, rgba);
    }

    void fill_rect(double x, double y, double w, double h, const Rgba& c) {
        if (w <= 0 || h <= 0 || c.a == 0) return;
        double x1 = x + w, y1 = y + h;
        int iy0 = std::max(0, static_cast<int>(std::floor(y)));
        int iy1 = std::min(img_.height - 1, static_cast<int>(std::ceil(y1)) - 1);
        int ix0 = std::max(0, static_cast<int>(std::floor(x)));
        int ix1 = std::min(img_.width - 1, static_cast<int>(std::ceil(x1)) - 1);
        for (int py = iy0; py <= iy1; ++py) {
            double cy = std::min<double>(py + 1, y1) - std::max<double>(py, y);
            if (cy <= 0) continue;
            cy = std::min(cy, 1.0);
            // full-coverage interior columns take the SIMD row blend
            int full0 = static_cast<int>(std::ceil(x));
            int full1 = static_cast<int>(std::floor(x1)) - 1;
            full0 = std::max(full0, ix0);
            full1 = std::min(full1, ix1);
            for (int px = ix0; px <= ix1 && px < full0; ++px) edge_px(px, py, x, x1, cy, c);
            if (full0 <= full1 && cy >= 1.0 - 1e-12) {
                uint8_t rgba[4] = {c.r, c.g, c.b, c.a};
                kernels::blend_row(img_.px(full0, py), static_cast<std::size_t>(full1 - full0 + 1),
                                   rgba);
            } else {
                for (int px = full0; px <= full1; ++px) edge_px(px, py, x, x1, cy, c);
            }
            for (int px = std::max(full1 + 1, full0); px <= ix1; ++px) edge_px(px, py, x, x1, cy, c);
        }
    }

    void line(double x0, double y0, double x1, double y1, double width, const Rgba& c) {
        double half = std::max(width, 0.1) / 2.0;
        int bx0 = static_cast<int>(std::floor(std::min(x0, x1) - half - 1));
        int bx1 = static_cast<int>(std::ceil(std::max(x0, x1) + half + 1));
        int by0 = static_cast<int>(std::floor(std::min(y0, y1) - half - 1));
        int by1 = static_cast<int>(std::ceil(std::max(y0, y1) + half + 1));
        bx0 = std::max(bx0, 0);
        by0 = std::max(by0, 0);
        bx1 = std::min(bx1, img_.width - 1);
        by1 = std::min(by1, img_.height - 1);
        double dx = x1 - x0, dy = y1 - y0;
        double len_sq = dx * dx + dy * dy;
        for (int py = by0; py <= by1; ++py) {
            for (int px = bx0; px <= bx1; ++px) {
                double cx = px + 0.5, cy = py + 0.5;
                double t = len_sq > 0 ? ((cx - x0) * dx + (cy - y0) * dy) / len_sq : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                double qx = x0 + t * dx - cx, qy = y0 + t * dy - cy;
                double dist = std::sqrt(qx * qx + qy * qy);
                double cov = std::clamp(half + 0.5 - dist, 0.0, 1.0);
                if (cov > 0) blend_px(px, py, c, cov);
            }
        }
    }

    void polygon(const std::vector<Pt>& pts, const Rgba& c) {
        if (pts.size() < 3) return;
        double minx = pts[0].x, maxx = pts[0].x, miny = pts[0].y, maxy = pts[0].y;
        for (const Pt& p : pts) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
        int bx0 = std::max(0, static_cast<int>(std::floor(minx)));
        int bx1 = std::min(img_.width - 1, static_cast<int>(std::ceil(maxx)));
        int by0 = std::max(0, static_cast<int>(std::floor(miny)));
        int by1 = std::min(img_.height - 1, static_cast<int>(std::ceil(maxy)));
        auto inside = [&](double x, double y) {
            bool in = false;
            for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
                if ((pts[i].y > y) != (pts[j].y > y)) {
                    double xi = pts[j].x + (y - pts[j].y) / (pts[i].y - pts[j].y) *
                                               (pts[i].x - pts[j].x);
                    if (x < xi) in = !in;
                }
            }
            return in;
        };
        for (int py = by0; py <= by1; ++py) {
            for (int px = bx0; px <= bx1; ++px) {
                int hits = 0;
                for (int sy = 0; sy < 4; ++sy)
                    for (int sx = 0; sx < 4; ++sx)
                        if (inside(px + (sx + 0.5) / 4.0, py + (sy + 0.5) / 4.0)) ++hits;
                if (hits > 0) blend_px(px, py, c, hits / 16.0);
            }
        }
    }

    void text(double x, double y, const std::string& content, double font_px,
              const std::string& anchor, const Rgba& c) {
        int k = std::max(1, static_cast<int>(std::lround(font_px / kFontNativePx)));
        double width = static_cast<double>(content.size()) * kFontAdvance * k;
        if (anchor == "middle") x -= width / 2.0;
        else if (anchor == "end") x -= width;
        int pen_x = static_cast<int>(std::lround(x));
        int top = static_cast<int>(std::lround(y)) - kFontBaseline * k;
        for (char ch : content) {
            unsigned code = static_cast<unsigned char>(ch);
            if (code >= 32 && code < 127) {
                const uint8_t* cell = kFontCells[code - 32];
                for (int ry = 0; ry < kFontCellH; ++ry) {
                    uint8_t bits = cell[ry];
                    if (!bits) continue;
                    for (int rx = 0; rx < 8; ++rx) {
                        if (!(bits >> rx & 1)) continue;
                        for (int oy = 0; oy < k; ++oy)
                            for (int ox = 0; ox < k; ++ox)
                                blend_px(pen_x + rx * k + ox, top + ry * k + oy, c, 1.0);
                    }
                }
            }
            pen_x += kFontAdvance * k;
        }
    }

private:
    void edge_px(int px, int py, double x, double x1, double cy, const Rgba& c) {
        double cx = std::min<double>(px + 1, x1) - std::max<double>(px, x);
        if (cx <= 0) return;
        blend_px(px, py, c, std::min(cx, 1.0) * cy);
    }

    Image& img_;
};

// --- minimal XML scanning for the emitted subset -----------------------------

struct Element {
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::string content;  // text elements only
};

std::string unescape_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '&') {
            if (s.substr(i, 5) == "&amp;") {
                out.push_back('&');
                i += 4;
            } else if (s.substr(i, 4) == "&lt;") {
                out.push_back('<');
                i += 3;
            } else if (s.substr(i, 4) == "&gt;") {
                out.push_back('>');
                i += 3;
            } else if (s.substr(i, 6) == "&quot;") {
                out.push_back('"');
                i += 5;
            } else {
                out.push_back('&');
            }
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::vector<Element> scan_svg(std::string_view svg) {
    std::vector<Element> out;
    std::size_t i = 0;
    while (i < svg.size()) {
        std::size_t lt = svg.find('<', i);
        if (lt == std::string_view::npos) break;
        std::size_t gt = svg.find('>', lt);
        if (gt == std::string_view::npos) throw RenderError("", "unterminated SVG tag");
        std::string_view tag_body = svg.substr(lt + 1, gt - lt - 1);
        i = gt + 1;
        if (tag_body.empty() || tag_body[0] == '?' || tag_body[0] == '!' || tag_body[0] == '/')
            continue;

        Element el;
        std::size_t p = 0;
        while (p < tag_body.size() && !std::isspace(static_cast<unsigned char>(tag_body[p])) &&
               tag_body[p] != '/')
            el.tag.push_back(tag_body[p++]);
        while (p < tag_body.size()) {
            while (p < tag_body.size() && (std::isspace(static_cast<unsigned char>(tag_body[p])) ||
                                           tag_body[p] == '/'))
                ++p;
            if (p >= tag_body.size()) break;
            std::string key;
            while (p < tag_body.size() && tag_body[p] != '=' &&
                   !std::isspace(static_cast<unsigned char>(tag_body[p])))
                key.push_back(tag_body[p++]);
            while (p < tag_body.size() && (tag_body[p] == '=' || std::isspace(static_cast<unsigned char>(tag_body[p]))))
                if (tag_body[p++] == '=') break;
            if (p < tag_body.size() && tag_body[p] == '"') {
                std::size_t close = tag_body.find('"', p + 1);
                if (close == std::string_view::npos) throw RenderError("", "unterminated attribute");
                el.attrs[key] = unescape_entities(tag_body.substr(p + 1, close - p - 1));
                p = close + 1;
            }
        }

        if (el.tag == "text") {
            std::size_t end = svg.find("</text>", i);
            if (end == std::string_view::npos) throw RenderError("", "unterminated text element");
            el.content = unescape_entities(svg.substr(i, end - i));
            i = end + 7;
        }
        out.push_back(std::move(el));
    }
    return out;
}

double attr_num(const Element& el, const std::string& key, double fallback = 0.0) {
    auto it = el.attrs.find(key);
    if (it == el.attrs.end()) return fallback;
    return std::strtod(it->second.c_str(), nullptr);
}

std::string attr_str(const Element& el, const std::string& key, const std::string& fallback = "") {
    auto it = el.attrs.find(key);
    return it == el.attrs.end() ? fallback : it->second;
}

std::vector<Pt> parse_points(const std::string& s) {
    std::vector<Pt> pts;
    const char* p = s.c_str();
    char* end = nullptr;
    while (*p) {
        while (*p == ' ' || *p == ',') ++p;
        if (!*p) break;
        double x = std::strtod(p, &end);
        if (end == p) break;
        p = end;
        while (*p == ' ' || *p == ',') ++p;
        double y = std::strtod(p, &end);
        if (end == p) break;
        p = end;
        pts.push_back({x, y});
    }
    return pts;
}

}  // namespace

Image rasterize_svg(std::string_view svg, const RenderConfig& cfg) {
    std::vector<Element> elements = scan_svg(svg);
    double svg_w = 0, svg_h = 0;
    for (const Element& el : elements) {
        if (el.tag == "svg") {
            svg_w = attr_num(el, "width");
            svg_h = attr_num(el, "height");
            break;
        }
    }
    if (svg_w <= 0 || svg_h <= 0) throw RenderError("", "SVG without canvas dimensions");

    double s = static_cast<double>(cfg.dpi) / 96.0;
    Image img;
    img.width = std::max(1, static_cast<int>(std::lround(svg_w * s)));
    img.height = std::max(1, static_cast<int>(std::lround(svg_h * s)));
    img.rgba.assign(static_cast<std::size_t>(img.width) * img.height * 4, 0);
    // white backdrop; documents normally paint their own background rect
    for (int y = 0; y < img.height; ++y) {
        uint8_t* row = img.px(0, y);
        std::memset(row, 0xff, static_cast<std::size_t>(img.width) * 4);
    }

    Painter painter(img);
    for (const Element& el : elements) {
        if (el.tag == "svg") continue;
        if (el.tag == "rect") {
            std::string fill = attr_str(el, "fill", "#000000");
            if (fill == "none") continue;
            Rgba c = parse_color(fill, attr_num(el, "fill-opacity", 1.0));
            painter.fill_rect(attr_num(el, "x") * s, attr_num(el, "y") * s,
                              attr_num(el, "width") * s, attr_num(el, "height") * s, c);
        } else if (el.tag == "line") {
            Rgba c = parse_color(attr_str(el, "stroke", "#000000"), 1.0);
            painter.line(attr_num(el, "x1") * s, attr_num(el, "y1") * s, attr_num(el, "x2") * s,
                         attr_num(el, "y2") * s, attr_num(el, "stroke-width", 1.0) * s, c);
        } else if (el.tag == "polyline") {
            Rgba c = parse_color(attr_str(el, "stroke", "#000000"), 1.0);
            std::vector<Pt> pts = parse_points(attr_str(el, "points"));
            for (Pt& p : pts) {
                p.x *= s;
                p.y *= s;
            }
            double w = attr_num(el, "stroke-width", 1.0) * s;
            for (std::size_t i = 0; i + 1 < pts.size(); ++i)
                painter.line(pts[i].x, pts[i].y, pts[i + 1].x, pts[i + 1].y, w, c);
        } else if (el.tag == "polygon") {
            std::string fill = attr_str(el, "fill", "#000000");
            if (fill == "none") continue;
            Rgba c = parse_color(fill, attr_num(el, "fill-opacity", 1.0));
            std::vector<Pt> pts = parse_points(attr_str(el, "points"));
            for (Pt& p : pts) {
                p.x *= s;
                p.y *= s;
            }
            painter.polygon(pts, c);
        } else if (el.tag == "text") {
            Rgba c = parse_color(attr_str(el, "fill", "#000000"), 1.0);
            painter.text(attr_num(el, "x") * s, attr_num(el, "y") * s, el.content,
                         attr_num(el, "font-size", 12.0) * s, attr_str(el, "text-anchor", "start"),
                         c);
        } else {
            throw RenderError("", "unsupported SVG element <" + el.tag + ">");
        }
    }
    return img;
}

std::string encode_png(const Image& img) {
    // filter byte 0 ahead of every scanline
    std::string raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (1 + static_cast<std::size_t>(img.width) * 4));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back('\0');
        raw.append(reinterpret_cast<const char*>(img.px(0, y)),
                   static_cast<std::size_t>(img.width) * 4);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        throw RenderError("", "zlib compression failed");
    compressed.resize(bound);

    std::string out = "\x89PNG\r\n\x1a\n";
    auto be32 = [](uint32_t v) {
        std::string s(4, '\0');
        s[0] = static_cast<char>(v >> 24);
        s[1] = static_cast<char>(v >> 16);
        s[2] = static_cast<char>(v >> 8);
        s[3] = static_cast<char>(v);
        return s;
    };
    auto chunk = [&](const char* type, const std::string& data) {
        out += be32(static_cast<uint32_t>(data.size()));
        std::string body = std::string(type) + data;
        out += body;
        uLong crc = crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                          static_cast<uInt>(body.size()));
        out += be32(static_cast<uint32_t>(crc));
    };
    std::string ihdr = be32(static_cast<uint32_t>(img.width)) +
                       be32(static_cast<uint32_t>(img.height));
    ihdr += static_cast<char>(8);   // bit depth
    ihdr += static_cast<char>(6);   // RGBA
    ihdr += std::string(3, '\0');   // compression, filter, interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", "");
    return out;
}

std::string rasterize(std::string_view svg, const RenderConfig& cfg) {
    return encode_png(rasterize_svg(svg, cfg));
}

std::string render_png(const ChartAnnotation& a, const RenderConfig& cfg) {
    return encode_png(rasterize_svg(render_svg(a, cfg), cfg));
}

}  // namespace chartattack::render

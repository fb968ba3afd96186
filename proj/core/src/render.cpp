#include "dlo/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <zlib.h>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

Rgb clip_rgb(ClipColor c) {
    switch (c) {
        case ClipColor::red: return {200, 60, 60};
        case ClipColor::green: return {60, 160, 70};
        case ClipColor::blue: return {60, 90, 200};
        case ClipColor::yellow: return {210, 180, 40};
    }
    return {0, 0, 0};
}

void push_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void push_chunk(std::vector<uint8_t>& out, const char* type, const std::vector<uint8_t>& data) {
    push_u32(out, static_cast<uint32_t>(data.size()));
    std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uint32_t crc = static_cast<uint32_t>(
        crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start)));
    push_u32(out, crc);
}

}  // namespace

Canvas::Canvas(int w, int h, Rgb fill) : width(w), height(h) {
    pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill.r;
        pixels[i + 1] = fill.g;
        pixels[i + 2] = fill.b;
    }
}

void Canvas::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
}

void Canvas::disc(double cx, double cy, double radius, Rgb c) {
    int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
    int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= radius * radius) set(x, y, c);
        }
}

void Canvas::line(double x0, double y0, double x1, double y1, double half_width, Rgb c) {
    double dx = x1 - x0, dy = y1 - y0;
    double len2 = dx * dx + dy * dy;
    int bx0 = static_cast<int>(std::floor(std::min(x0, x1) - half_width));
    int bx1 = static_cast<int>(std::ceil(std::max(x0, x1) + half_width));
    int by0 = static_cast<int>(std::floor(std::min(y0, y1) - half_width));
    int by1 = static_cast<int>(std::ceil(std::max(y0, y1) + half_width));
    for (int y = by0; y <= by1; ++y)
        for (int x = bx0; x <= bx1; ++x) {
            double px = x + 0.5 - x0, py = y + 0.5 - y0;
            double t = len2 > 0 ? std::clamp((px * dx + py * dy) / len2, 0.0, 1.0) : 0.0;
            double ex = px - t * dx, ey = py - t * dy;
            if (ex * ex + ey * ey <= half_width * half_width) set(x, y, c);
        }
}

void Canvas::fill_quad(const std::array<std::array<double, 2>, 4>& q, Rgb c) {
    double bx0 = q[0][0], bx1 = q[0][0], by0 = q[0][1], by1 = q[0][1];
    for (const auto& p : q) {
        bx0 = std::min(bx0, p[0]);
        bx1 = std::max(bx1, p[0]);
        by0 = std::min(by0, p[1]);
        by1 = std::max(by1, p[1]);
    }
    auto inside = [&](double px, double py) {
        int sign = 0;
        for (int i = 0; i < 4; ++i) {
            const auto& a = q[static_cast<std::size_t>(i)];
            const auto& b = q[static_cast<std::size_t>((i + 1) % 4)];
            double cr = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
            if (cr > 1e-12) {
                if (sign < 0) return false;
                sign = 1;
            } else if (cr < -1e-12) {
                if (sign > 0) return false;
                sign = -1;
            }
        }
        return true;
    };
    for (int y = static_cast<int>(std::floor(by0)); y <= static_cast<int>(std::ceil(by1)); ++y)
        for (int x = static_cast<int>(std::floor(bx0)); x <= static_cast<int>(std::ceil(bx1)); ++x)
            if (inside(x + 0.5, y + 0.5)) set(x, y, c);
}

Canvas render_view(const Scene& scene, const std::vector<Vec2>& rope, const Rect& view,
                   int width_px, bool draw_gripper, Vec2 gripper_pos, double gripper_radius) {
    double vw = view.hi.x - view.lo.x, vh = view.hi.y - view.lo.y;
    if (vw <= 0 || vh <= 0 || width_px < 8)
        throw StateError("render view must have positive extent and width >= 8 px");
    double ppm = width_px / vw;
    int height_px = std::max(8, static_cast<int>(std::lround(vh * ppm)));
    Canvas cv(width_px, height_px);
    auto X = [&](double wx) { return (wx - view.lo.x) * ppm; };
    auto Y = [&](double wy) { return (view.hi.y - wy) * ppm; };

    // workspace boundary
    Rgb gray{180, 180, 180};
    cv.line(X(scene.workspace.lo.x), Y(scene.workspace.lo.y), X(scene.workspace.hi.x),
            Y(scene.workspace.lo.y), 1.0, gray);
    cv.line(X(scene.workspace.hi.x), Y(scene.workspace.lo.y), X(scene.workspace.hi.x),
            Y(scene.workspace.hi.y), 1.0, gray);
    cv.line(X(scene.workspace.hi.x), Y(scene.workspace.hi.y), X(scene.workspace.lo.x),
            Y(scene.workspace.hi.y), 1.0, gray);
    cv.line(X(scene.workspace.lo.x), Y(scene.workspace.hi.y), X(scene.workspace.lo.x),
            Y(scene.workspace.lo.y), 1.0, gray);

    for (const auto& clip : scene.clips) {
        Rgb c = clip_rgb(clip.color);
        for (const auto& quad : clip.footprint()) {
            std::array<std::array<double, 2>, 4> q;
            for (int i = 0; i < 4; ++i)
                q[static_cast<std::size_t>(i)] = {X(quad[static_cast<std::size_t>(i)].x),
                                                  Y(quad[static_cast<std::size_t>(i)].y)};
            cv.fill_quad(q, c);
        }
        // channel axis tick from floor to ceiling
        Vec2 f = clip.to_world({0.0, 0.0}), t = clip.to_world({clip.channel_depth(), 0.0});
        cv.line(X(f.x), Y(f.y), X(t.x), Y(t.y), 0.8, {90, 90, 90});
    }

    Rgb rope_c{40, 40, 40};
    for (std::size_t i = 1; i < rope.size(); ++i)
        cv.line(X(rope[i - 1].x), Y(rope[i - 1].y), X(rope[i].x), Y(rope[i].y),
                std::max(1.0, 0.002 * ppm), rope_c);
    if (!rope.empty()) cv.disc(X(rope[0].x), Y(rope[0].y), std::max(2.0, 0.004 * ppm), {220, 120, 30});

    if (draw_gripper)
        cv.disc(X(gripper_pos.x), Y(gripper_pos.y), gripper_radius * ppm, {100, 100, 220});
    return cv;
}

std::vector<uint8_t> encode_png(const Canvas& canvas) {
    if (canvas.width <= 0 || canvas.height <= 0)
        throw StateError("cannot encode an empty canvas");
    // filter type 0 per scanline
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(canvas.height) * (canvas.width * 3 + 1));
    for (int y = 0; y < canvas.height; ++y) {
        raw.push_back(0);
        const uint8_t* row = canvas.pixels.data() + static_cast<std::size_t>(y) * canvas.width * 3;
        raw.insert(raw.end(), row, row + canvas.width * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("png: zlib compression failed");
    compressed.resize(bound);

    std::vector<uint8_t> out{137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<uint8_t> ihdr;
    push_u32(ihdr, static_cast<uint32_t>(canvas.width));
    push_u32(ihdr, static_cast<uint32_t>(canvas.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", compressed);
    push_chunk(out, "IEND", {});
    return out;
}

void write_png(const Canvas& canvas, const std::string& path) {
    std::vector<uint8_t> bytes = encode_png(canvas);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to '" + path + "'");
}

}  // namespace dlo

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlo/geometry.hpp"
#include "dlo/scene.hpp"

namespace dlo {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

struct Canvas {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // RGB, row-major, top row first

    Canvas(int w, int h, Rgb fill = {255, 255, 255});
    void set(int x, int y, Rgb c);
    void disc(double cx, double cy, double radius, Rgb c);
    void line(double x0, double y0, double x1, double y1, double half_width, Rgb c);
    void fill_quad(const std::array<std::array<double, 2>, 4>& q, Rgb c);
};

/// Top-down view of a region of the scene. Pixels per meter derives from
/// width / view width.
Canvas render_view(const Scene& scene, const std::vector<Vec2>& rope,
                   const Rect& view, int width_px, bool draw_gripper = false,
                   Vec2 gripper_pos = {}, double gripper_radius = 0.012);

/// Minimal PNG (8-bit RGB, zlib-compressed).
void write_png(const Canvas& canvas, const std::string& path);
std::vector<uint8_t> encode_png(const Canvas& canvas);

}  // namespace dlo

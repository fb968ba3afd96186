#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace dlo {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
inline Vec2& operator+=(Vec2& a, Vec2 b) { a.x += b.x; a.y += b.y; return a; }
inline Vec2& operator-=(Vec2& a, Vec2 b) { a.x -= b.x; a.y -= b.y; return a; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

inline Vec2 normalized(Vec2 a) {
    double n = norm(a);
    return n > 0.0 ? Vec2{a.x / n, a.y / n} : Vec2{0.0, 0.0};
}

inline Vec2 rotated(Vec2 a, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * a.x - s * a.y, s * a.x + c * a.y};
}

inline Vec2 dir_of(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Wrap into (-pi, pi].
inline double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

/// Rigid 2D pose; to_world maps local -> world, to_local the inverse.
struct Pose2 {
    Vec2 pos;
    double heading = 0.0;

    Vec2 to_world(Vec2 local) const { return pos + rotated(local, heading); }
    Vec2 to_local(Vec2 world) const { return rotated(world - pos, -heading); }
};

/// Axis-aligned rectangle, lo <= hi componentwise.
struct Rect {
    Vec2 lo;
    Vec2 hi;

    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    Vec2 clamp(Vec2 p) const {
        return {std::fmin(std::fmax(p.x, lo.x), hi.x),
                std::fmin(std::fmax(p.y, lo.y), hi.y)};
    }
    Vec2 center() const { return 0.5 * (lo + hi); }
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
};

/// Distance from point to rect boundary-or-interior (0 inside).
inline double rect_distance(const Rect& r, Vec2 p) {
    double dx = std::fmax(std::fmax(r.lo.x - p.x, 0.0), p.x - r.hi.x);
    double dy = std::fmax(std::fmax(r.lo.y - p.y, 0.0), p.y - r.hi.y);
    return std::sqrt(dx * dx + dy * dy);
}

using Quad = std::array<Vec2, 4>;

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);
double segment_point_distance(Vec2 a, Vec2 b, Vec2 p);
double segment_segment_distance(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);
bool point_in_quad(const Quad& q, Vec2 p);
double quad_distance(const Quad& a, const Quad& b);

}  // namespace dlo

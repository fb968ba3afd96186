#include "dlo/geometry.hpp"

#include <algorithm>

namespace dlo {

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    double v = cross(b - a, c - a);
    if (v > 1e-15) return 1;
    if (v < -1e-15) return -1;
    return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) - 1e-15 <= p.x && p.x <= std::max(a.x, b.x) + 1e-15 &&
           std::min(a.y, b.y) - 1e-15 <= p.y && p.y <= std::max(a.y, b.y) + 1e-15;
}

}  // namespace

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
    int o1 = orientation(a0, a1, b0);
    int o2 = orientation(a0, a1, b1);
    int o3 = orientation(b0, b1, a0);
    int o4 = orientation(b0, b1, a1);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a0, a1, b0)) return true;
    if (o2 == 0 && on_segment(a0, a1, b1)) return true;
    if (o3 == 0 && on_segment(b0, b1, a0)) return true;
    if (o4 == 0 && on_segment(b0, b1, a1)) return true;
    return false;
}

double segment_point_distance(Vec2 a, Vec2 b, Vec2 p) {
    Vec2 ab = b - a;
    double len2 = dot(ab, ab);
    if (len2 <= 0.0) return dist(a, p);
    double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return dist(a + t * ab, p);
}

double segment_segment_distance(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
    if (segments_intersect(a0, a1, b0, b1)) return 0.0;
    return std::min(std::min(segment_point_distance(a0, a1, b0),
                             segment_point_distance(a0, a1, b1)),
                    std::min(segment_point_distance(b0, b1, a0),
                             segment_point_distance(b0, b1, a1)));
}

bool point_in_quad(const Quad& q, Vec2 p) {
    // Convex, consistent winding assumed.
    double sign = 0.0;
    for (int i = 0; i < 4; ++i) {
        double c = cross(q[(i + 1) % 4] - q[i], p - q[i]);
        if (c != 0.0) {
            if (sign == 0.0) {
                sign = c;
            } else if ((c > 0.0) != (sign > 0.0)) {
                return false;
            }
        }
    }
    return true;
}

double quad_distance(const Quad& a, const Quad& b) {
    if (point_in_quad(a, b[0]) || point_in_quad(b, a[0])) return 0.0;
    double best = 1e300;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            best = std::min(best, segment_segment_distance(a[i], a[(i + 1) % 4],
                                                           b[j], b[(j + 1) % 4]));
        }
    }
    return best;
}

}  // namespace dlo

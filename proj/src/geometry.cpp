#include "twix/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace twix {

bool Box::valid() const {
  return w > 0.0 && h > 0.0 && std::isfinite(x) && std::isfinite(y) &&
         std::isfinite(w) && std::isfinite(h);
}

static double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

double buffered_iou(const Box& a, const Box& b, double buffer) {
  auto expand = [buffer](const Box& box) {
    Box e;
    e.w = box.w * (1.0 + 2.0 * buffer);
    e.h = box.h * (1.0 + 2.0 * buffer);
    e.x = box.cx() - 0.5 * e.w;
    e.y = box.cy() - 0.5 * e.h;
    return e;
  };
  return iou(expand(a), expand(b));
}

static Box enclosing(const Box& a, const Box& b) {
  Box c;
  c.x = std::min(a.x, b.x);
  c.y = std::min(a.y, b.y);
  c.w = std::max(a.x2(), b.x2()) - c.x;
  c.h = std::max(a.y2(), b.y2()) - c.y;
  return c;
}

double giou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const Box c = enclosing(a, b);
  return inter / uni - (c.area() - uni) / c.area();
}

double diou(const Box& a, const Box& b) {
  const Box c = enclosing(a, b);
  const double dx = a.cx() - b.cx();
  const double dy = a.cy() - b.cy();
  const double diag2 = c.w * c.w + c.h * c.h;
  return iou(a, b) - (dx * dx + dy * dy) / diag2;
}

double center_distance(const Box& a, const Box& b, Norm norm) {
  const double dx = a.cx() - b.cx();
  const double dy = a.cy() - b.cy();
  if (norm == Norm::L1) return std::abs(dx) + std::abs(dy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace twix

#pragma once

#include <cstdint>

namespace twix {

// Axis-aligned bounding box in MOT top-left form. Corner form is derived on
// demand via x2()/y2().
struct Box {
  double x = 0.0;  // left edge
  double y = 0.0;  // top edge
  double w = 0.0;  // width,  > 0
  double h = 0.0;  // height, > 0

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  bool valid() const;
};

struct Detection {
  int frame = 1;  // 1-based frame index
  Box box;
  double score = 0.0;  // confidence in [0, 1]
  int class_id = 1;
};

enum class Norm { L1, L2 };

// Intersection over union in [0, 1]. Touching boxes (zero-area overlap)
// score 0.
double iou(const Box& a, const Box& b);

// IoU after expanding both boxes around their centers: w <- w * (1 + 2b),
// h <- h * (1 + 2b).
double buffered_iou(const Box& a, const Box& b, double buffer);

// Generalized IoU in (-1, 1]: IoU minus the fraction of the tightest
// enclosing box not covered by the union.
double giou(const Box& a, const Box& b);

// Distance IoU in (-1, 1]: IoU minus squared center distance over squared
// enclosing-box diagonal.
double diou(const Box& a, const Box& b);

// L1 or L2 distance between box centers.
double center_distance(const Box& a, const Box& b, Norm norm);

}  // namespace twix

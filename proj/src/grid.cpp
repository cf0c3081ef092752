#include "adaptex/grid.hpp"

namespace adaptex {

int snap_time(double t, double time_step, double horizon) {
  const double eps = 1e-9 * std::max(1.0, horizon);
  if (t < -eps) throw std::invalid_argument("sample time before 0");
  if (t > 2.0 * horizon + eps) throw std::invalid_argument("out of horizon: t > 2T");
  if (t > horizon + eps) return -1;
  const double j = std::ceil(t / time_step - 1e-9);
  return static_cast<int>(std::max(0.0, j));
}

double sample_field(const FieldView& field, double t, const Point& p, long* clamp_count) {
  const int j = snap_time(t, field.time_step, field.horizon);
  if (j < 0) return field.grid->interpolate(*field.post_horizon, p, clamp_count);
  return field.grid->interpolate(field.slices[static_cast<std::size_t>(j)], p, clamp_count);
}

}  // namespace adaptex

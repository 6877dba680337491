#include "phdeval/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "phdeval/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phdeval {

namespace {

void check_representable(Shape shape) {
  const std::uint64_t w = static_cast<std::uint64_t>(shape.width);
  const std::uint64_t h = static_cast<std::uint64_t>(shape.height);
  if ((w + h) * (w + h) > std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("raster " + to_string(shape) + " too large for 32-bit squared distances");
  }
}

// floor(a / b) for b > 0.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

}  // namespace

DistanceField exact_edt(const BinaryMask& mask) {
  if (mask.empty_foreground()) throw EmptyMask("distance transform needs at least one foreground pixel");
  check_representable(mask.shape());

  const std::ptrdiff_t w = mask.width();
  const std::ptrdiff_t h = mask.height();
  const std::uint32_t inf = static_cast<std::uint32_t>(w + h);
  auto bits = mask.bits();

  // Pass 1: vertical distance to the nearest foreground pixel in the same
  // column. Columns are split into contiguous blocks, swept row by row.
  std::vector<std::uint32_t> buf(mask.size());
#pragma omp parallel
  {
    std::ptrdiff_t begin = 0, end = w;
#ifdef _OPENMP
    const std::ptrdiff_t nt = omp_get_num_threads(), t = omp_get_thread_num();
    begin = w * t / nt;
    end = w * (t + 1) / nt;
#endif
    if (begin < end) {
      for (std::ptrdiff_t x = begin; x < end; ++x) buf[x] = bits[x] ? 0 : inf;
      for (std::ptrdiff_t y = 1; y < h; ++y) {
        const std::uint8_t* b = bits.data() + y * w;
        std::uint32_t* cur = buf.data() + y * w;
        const std::uint32_t* up = cur - w;
        for (std::ptrdiff_t x = begin; x < end; ++x) cur[x] = b[x] ? 0 : std::min(inf, up[x] + 1);
      }
      for (std::ptrdiff_t y = h - 2; y >= 0; --y) {
        std::uint32_t* cur = buf.data() + y * w;
        const std::uint32_t* down = cur + w;
        for (std::ptrdiff_t x = begin; x < end; ++x) cur[x] = std::min(cur[x], down[x] + 1);
      }
    }
  }

  // Pass 2: per row, lower envelope of parabolas (u - i)^2 + g(i)^2.
#pragma omp parallel
  {
    std::vector<std::int64_t> g(static_cast<std::size_t>(w));
    std::vector<std::ptrdiff_t> site(static_cast<std::size_t>(w));
    std::vector<std::ptrdiff_t> start(static_cast<std::size_t>(w));
#pragma omp for schedule(static)
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      std::uint32_t* row = buf.data() + y * w;
      for (std::ptrdiff_t x = 0; x < w; ++x) g[x] = row[x];

      auto f = [&](std::ptrdiff_t u, std::ptrdiff_t i) {
        const std::int64_t d = u - i;
        return d * d + g[i] * g[i];
      };
      auto sep = [&](std::ptrdiff_t i, std::ptrdiff_t u) {
        return floor_div(u * u - i * i + g[u] * g[u] - g[i] * g[i], 2 * (u - i));
      };

      std::ptrdiff_t q = 0;
      site[0] = 0;
      start[0] = 0;
      for (std::ptrdiff_t u = 1; u < w; ++u) {
        while (q >= 0 && f(start[q], site[q]) > f(start[q], u)) --q;
        if (q < 0) {
          q = 0;
          site[0] = u;
        } else {
          const std::int64_t s = 1 + sep(site[q], u);
          if (s < w) {
            ++q;
            site[q] = u;
            start[q] = static_cast<std::ptrdiff_t>(s);
          }
        }
      }
      for (std::ptrdiff_t u = w - 1; u >= 0; --u) {
        row[u] = static_cast<std::uint32_t>(f(u, site[q]));
        if (u == start[q]) --q;
      }
    }
  }
  return DistanceField(mask.shape(), std::move(buf));
}

DistanceField brute_force_edt(const BinaryMask& mask) {
  std::vector<Point> fg;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) fg.push_back({x, y});
  if (fg.empty()) throw EmptyMask("distance transform needs at least one foreground pixel");
  check_representable(mask.shape());

  std::vector<std::uint32_t> dist2(mask.size());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
      for (const Point& q : fg) {
        const std::int64_t dx = x - q.x, dy = y - q.y;
        best = std::min<std::uint64_t>(best, static_cast<std::uint64_t>(dx * dx + dy * dy));
      }
      dist2[mask.index(x, y)] = static_cast<std::uint32_t>(best);
    }
  }
  return DistanceField(mask.shape(), std::move(dist2));
}

std::vector<double> sample_min_distances(const DistanceField& field, const Skeleton& points) {
  const Shape shape = field.shape();
  if (points.shape() != shape) {
    throw OutOfBounds("point set of shape " + to_string(points.shape()) + " sampled on field " + to_string(shape));
  }
  auto pts = points.points();
  std::vector<double> out(pts.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Point p = pts[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = std::sqrt(static_cast<double>(field.at(p.x, p.y)));
  }
  return out;
}

}  // namespace phdeval

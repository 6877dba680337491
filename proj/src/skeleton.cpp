#include "phdeval/skeleton.hpp"

#include <algorithm>
#include <array>

#include "phdeval/errors.hpp"

namespace phdeval {

Skeleton::Skeleton(Shape shape, std::vector<Point> points) : shape_(shape), points_(std::move(points)) {
  for (const Point& p : points_) {
    if (p.x < 0 || p.y < 0 || p.x >= shape_.width || p.y >= shape_.height) {
      throw OutOfBounds("point (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") outside " +
                        to_string(shape_));
    }
  }
  std::sort(points_.begin(), points_.end());
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
}

Skeleton skeleton_from_mask(const BinaryMask& mask) {
  std::vector<Point> points;
  auto bits = mask.bits();
  for (int y = 0; y < mask.height(); ++y) {
    const std::uint8_t* row = bits.data() + mask.index(0, y);
    for (int x = 0; x < mask.width(); ++x) {
      if (row[x]) points.push_back({x, y});
    }
  }
  return Skeleton(mask.shape(), std::move(points), Skeleton::Trusted{});
}

BinaryMask skeleton_to_mask(const Skeleton& s) {
  BinaryMask mask(s.shape());
  for (const Point& p : s.points()) mask.set(p.x, p.y, true);
  return mask;
}

namespace {

// Neighbourhood code: bit k holds P(k+2), i.e. N, NE, E, SE, S, SW, W, NW.
using DeletionTable = std::array<std::array<bool, 256>, 2>;

constexpr DeletionTable make_deletion_table() {
  DeletionTable table{};
  for (int code = 0; code < 256; ++code) {
    int p[8];
    int b = 0;
    for (int k = 0; k < 8; ++k) {
      p[k] = (code >> k) & 1;
      b += p[k];
    }
    int a = 0;
    for (int k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1);
    const int n = p[0], e = p[2], s = p[4], w = p[6];
    const bool common = b >= 2 && b <= 6 && a == 1;
    table[0][code] = common && n * e * s == 0 && e * s * w == 0;
    table[1][code] = common && n * e * w == 0 && n * s * w == 0;
  }
  return table;
}

constexpr DeletionTable kDeletable = make_deletion_table();

}  // namespace

Skeleton thin(const BinaryMask& mask) {
  const std::ptrdiff_t w = mask.width();
  const std::ptrdiff_t h = mask.height();
  const std::ptrdiff_t stride = w + 2;

  // One-pixel background frame so neighbour reads need no bounds checks.
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(stride * (h + 2)), 0);
  auto bits = mask.bits();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    std::copy_n(bits.data() + y * w, w, grid.data() + (y + 1) * stride + 1);
  }

  std::vector<std::ptrdiff_t> live;
  live.reserve(mask.count());
  for (std::ptrdiff_t i = stride; i < stride * (h + 1); ++i) {
    if (grid[static_cast<std::size_t>(i)]) live.push_back(i);
  }

  const std::array<std::ptrdiff_t, 8> offset = {-stride,     -stride + 1, 1,  stride + 1,
                                                stride,      stride - 1,  -1, -stride - 1};
  std::vector<std::uint8_t> flag;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub) {
      const auto& table = kDeletable[static_cast<std::size_t>(sub)];
      const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(live.size());
      flag.assign(live.size(), 0);
      std::size_t deleted = 0;

#pragma omp parallel for schedule(static) reduction(+ : deleted)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::uint8_t* c = grid.data() + live[static_cast<std::size_t>(i)];
        unsigned code = 0;
        for (unsigned k = 0; k < 8; ++k) code |= static_cast<unsigned>(c[offset[k]]) << k;
        if (table[code]) {
          flag[static_cast<std::size_t>(i)] = 1;
          ++deleted;
        }
      }
      if (deleted == 0) continue;
      changed = true;

#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (flag[static_cast<std::size_t>(i)]) grid[static_cast<std::size_t>(live[static_cast<std::size_t>(i)])] = 0;
      }
      std::size_t out = 0;
      for (std::size_t i = 0; i < live.size(); ++i) {
        if (!flag[i]) live[out++] = live[i];
      }
      live.resize(out);
    }
  }

  std::vector<Point> points(live.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(live.size()); ++i) {
    const std::ptrdiff_t idx = live[static_cast<std::size_t>(i)];
    points[static_cast<std::size_t>(i)] = {static_cast<int>(idx % stride - 1), static_cast<int>(idx / stride - 1)};
  }
  return Skeleton(mask.shape(), std::move(points));
}

namespace reference {

Skeleton thin(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::vector<int>> img(static_cast<std::size_t>(h), std::vector<int>(static_cast<std::size_t>(w)));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img[y][x] = mask.at(x, y) ? 1 : 0;

  auto px = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : img[y][x]; };

  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 1; sub <= 2; ++sub) {
      std::vector<std::pair<int, int>> marked;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!img[y][x]) continue;
          const int p2 = px(x, y - 1), p3 = px(x + 1, y - 1), p4 = px(x + 1, y), p5 = px(x + 1, y + 1);
          const int p6 = px(x, y + 1), p7 = px(x - 1, y + 1), p8 = px(x - 1, y), p9 = px(x - 1, y - 1);
          const int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
          int a = 0;
          for (int k = 0; k < 8; ++k) a += (seq[k] == 0 && seq[k + 1] == 1);
          const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (b < 2 || b > 6 || a != 1) continue;
          const bool ok = sub == 1 ? (p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0)
                                   : (p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0);
          if (ok) marked.emplace_back(x, y);
        }
      }
      for (auto [x, y] : marked) img[y][x] = 0;
      if (!marked.empty()) changed = true;
    }
  }

  std::vector<Point> points;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (img[y][x]) points.push_back({x, y});
  return Skeleton(mask.shape(), std::move(points));
}

}  // namespace reference

std::size_t count_components8(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Point> stack;
  std::size_t components = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || seen[mask.index(x, y)]) continue;
      ++components;
      seen[mask.index(x, y)] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t j = mask.index(nx, ny);
            if (mask.at(nx, ny) && !seen[j]) {
              seen[j] = 1;
              stack.push_back({nx, ny});
            }
          }
        }
      }
    }
  }
  return components;
}

}  // namespace phdeval

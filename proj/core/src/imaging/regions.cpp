#include "celltrack/imaging/regions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

namespace celltrack::imaging {

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

constexpr std::int64_t kBackground = -1;

// Labels 8-connected components of one frame; returns the number of labels.
std::size_t label_frame(std::span<const std::uint8_t> frame, std::size_t h, std::size_t w,
                        std::span<std::int64_t> labels, std::int64_t base) {
  std::fill(labels.begin(), labels.end(), kBackground);
  std::size_t count = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < frame.size(); ++start) {
    if (!frame[start] || labels[start] != kBackground) continue;
    const std::int64_t id = base + static_cast<std::int64_t>(count++);
    labels[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t r = p / w, c = p % w;
      const std::size_t r0 = r ? r - 1 : 0, r1 = std::min(r + 1, h - 1);
      const std::size_t c0 = c ? c - 1 : 0, c1 = std::min(c + 1, w - 1);
      for (std::size_t rr = r0; rr <= r1; ++rr) {
        for (std::size_t cc = c0; cc <= c1; ++cc) {
          const std::size_t q = rr * w + cc;
          if (frame[q] && labels[q] == kBackground) {
            labels[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return count;
}

}  // namespace

std::span<const Voxel> Region3D::footprint(int t) const {
  if (t < first_frame || t > last_frame) return {};
  const auto k = static_cast<std::size_t>(t - first_frame);
  return {voxels.data() + frame_offsets[k], frame_offsets[k + 1] - frame_offsets[k]};
}

std::vector<Region3D> label_regions(const BinaryVolume& vol, const LabelOptions& options) {
  const std::size_t plane = vol.frame_size();
  std::vector<std::int64_t> labels(vol.size(), kBackground);
  std::size_t total = 0;
  for (std::size_t t = 0; t < vol.frames; ++t) {
    total += label_frame(vol.frame(t), vol.height, vol.width, {labels.data() + t * plane, plane},
                         static_cast<std::int64_t>(total));
  }

  DisjointSet sets(total);
  const std::size_t min_overlap = std::max<std::size_t>(1, options.min_overlap);
  for (std::size_t t = 0; t + 1 < vol.frames; ++t) {
    const std::int64_t* a = labels.data() + t * plane;
    const std::int64_t* b = labels.data() + (t + 1) * plane;
    if (min_overlap == 1) {
      for (std::size_t i = 0; i < plane; ++i) {
        if (a[i] != kBackground && b[i] != kBackground) {
          sets.unite(static_cast<std::size_t>(a[i]), static_cast<std::size_t>(b[i]));
        }
      }
    } else {
      std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> overlap;
      for (std::size_t i = 0; i < plane; ++i) {
        if (a[i] != kBackground && b[i] != kBackground) ++overlap[{a[i], b[i]}];
      }
      for (const auto& [pair, n] : overlap) {
        if (n >= min_overlap) sets.unite(static_cast<std::size_t>(pair.first), static_cast<std::size_t>(pair.second));
      }
    }
  }

  // Scanning in (t, row, col) order keeps each region's voxels sorted.
  std::vector<std::int64_t> region_of_root(total, -1);
  std::vector<Region3D> regions;
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (labels[idx] == kBackground) continue;
    const std::size_t root = sets.find(static_cast<std::size_t>(labels[idx]));
    if (region_of_root[root] < 0) {
      region_of_root[root] = static_cast<std::int64_t>(regions.size());
      regions.emplace_back();
    }
    const int t = static_cast<int>(idx / plane);
    const std::size_t rem = idx % plane;
    regions[static_cast<std::size_t>(region_of_root[root])].voxels.push_back(
        {t, static_cast<int>(rem / vol.width), static_cast<int>(rem % vol.width)});
  }

  for (auto& reg : regions) {
    reg.first_frame = reg.voxels.front().t;
    reg.last_frame = reg.voxels.back().t;
    const auto len = static_cast<std::size_t>(reg.temporal_length());
    reg.frame_offsets.assign(len + 1, 0);
    for (const auto& v : reg.voxels) ++reg.frame_offsets[static_cast<std::size_t>(v.t - reg.first_frame) + 1];
    std::partial_sum(reg.frame_offsets.begin(), reg.frame_offsets.end(), reg.frame_offsets.begin());
  }
  std::sort(regions.begin(), regions.end(),
            [](const Region3D& a, const Region3D& b) { return a.voxels.front() < b.voxels.front(); });
  return regions;
}

EventPoint mass_center(const Region3D& region) {
  if (region.voxels.empty()) throw ShapeError("mass_center: empty region");
  double st = 0, sr = 0, sc = 0;
  for (const auto& v : region.voxels) {
    st += v.t;
    sr += v.row;
    sc += v.col;
  }
  const double n = static_cast<double>(region.voxels.size());
  auto round_half_up = [](double x) { return static_cast<int>(std::floor(x + 0.5)); };
  return {round_half_up(st / n), round_half_up(sr / n), round_half_up(sc / n)};
}

double Component2D::compactness() const {
  if (crack_length == 0) return 0.0;
  const double perimeter = static_cast<double>(crack_length) * std::numbers::pi / 4.0;
  return 4.0 * std::numbers::pi * static_cast<double>(area) / (perimeter * perimeter);
}

std::vector<Component2D> connected_components_2d(std::span<const std::uint8_t> frame, std::size_t height,
                                                 std::size_t width) {
  if (frame.size() != height * width) throw ShapeError("connected_components_2d: frame size mismatch");
  std::vector<std::int64_t> labels(frame.size());
  const std::size_t count = label_frame(frame, height, width, labels, 0);
  std::vector<Component2D> comps(count);
  for (std::size_t p = 0; p < frame.size(); ++p) {
    if (labels[p] == kBackground) continue;
    auto& comp = comps[static_cast<std::size_t>(labels[p])];
    comp.pixels.push_back(p);
    ++comp.area;
    const std::size_t r = p / width, c = p % width;
    comp.crack_length += (r == 0 || !frame[p - width]) + (r + 1 == height || !frame[p + width]) +
                         (c == 0 || !frame[p - 1]) + (c + 1 == width || !frame[p + 1]);
  }
  return comps;
}

}  // namespace celltrack::imaging

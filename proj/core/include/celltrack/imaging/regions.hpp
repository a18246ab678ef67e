#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::imaging {

struct Voxel {
  int t = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const Voxel&) const = default;
};

/// Spatio-temporally connected voxel set. Voxels are sorted by (t, row, col) and
/// every frame in [first_frame, last_frame] holds a nonempty footprint.
struct Region3D {
  std::vector<Voxel> voxels;
  int first_frame = 0;
  int last_frame = 0;
  /// footprint(t) is voxels[frame_offsets[t - first]] .. voxels[frame_offsets[t - first + 1]].
  std::vector<std::size_t> frame_offsets;

  int temporal_length() const { return last_frame - first_frame + 1; }
  std::span<const Voxel> footprint(int t) const;
};

struct LabelOptions {
  /// Pixel positions two 2D components in consecutive frames must share to be linked.
  std::size_t min_overlap = 1;
};

/// 8-connected components per frame, then union of components in consecutive
/// frames that overlap in at least `min_overlap` positions. Sorted by
/// (first_frame, first voxel row, first voxel col).
std::vector<Region3D> label_regions(const BinaryVolume& vol, const LabelOptions& options = {});

/// Mean voxel coordinate, each axis rounded half-up. Throws on an empty region.
EventPoint mass_center(const Region3D& region);

struct Component2D {
  std::vector<std::size_t> pixels;  // flat indices r * width + c
  std::size_t area = 0;
  /// Count of pixel edges bordering background or the frame edge.
  std::size_t crack_length = 0;

  /// 4 pi A / P^2 with P = crack_length * pi / 4, which makes a digitised disc score ~1.
  double compactness() const;
};

std::vector<Component2D> connected_components_2d(std::span<const std::uint8_t> frame, std::size_t height,
                                                 std::size_t width);

}  // namespace celltrack::imaging

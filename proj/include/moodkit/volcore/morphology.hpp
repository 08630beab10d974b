#pragma once

#include <vector>

#include "moodkit/volcore/volume.hpp"

namespace moodkit::volcore {

struct Offset3 {
    int dx;
    int dy;
    int dz;
};

/// Digital Euclidean ball: all integer offsets with dx^2 + dy^2 + dz^2 <= r^2.
std::vector<Offset3> ball_offsets(int radius);

// Voxels outside the grid count as background for dilation and as foreground
// for erosion, so a mask touching the border is not eaten from outside.
BinaryMask3D dilate_ball(const BinaryMask3D& m, int radius);
BinaryMask3D erode_ball(const BinaryMask3D& m, int radius);
BinaryMask3D close_ball(const BinaryMask3D& m, int radius);

/// Erosion/dilation with an axis-aligned cube of the given edge. For even edges the
/// element spans [-edge/2, edge/2 - 1]; dilation uses the reflected element so that
/// opening is the union of all cube placements that fit inside the mask.
BinaryMask3D erode_cube(const BinaryMask3D& m, int edge);
BinaryMask3D dilate_cube(const BinaryMask3D& m, int edge);
BinaryMask3D open_cube(const BinaryMask3D& m, int edge);

/// Component labels under 26-connectivity; 0 is background, labels start at 1.
struct Components {
    std::vector<int> labels;
    std::vector<std::size_t> sizes; ///< sizes[k] is the voxel count of label k + 1
};
Components label_components(const BinaryMask3D& m);

/// Keeps the largest 26-connected component (lowest label on ties).
BinaryMask3D largest_component(const BinaryMask3D& m);

/// Sets every background voxel not 6-connected to the grid border.
BinaryMask3D fill_holes(const BinaryMask3D& m);

} // namespace moodkit::volcore

#pragma once

#include <vector>

#include "moodkit/volcore/volume.hpp"

namespace moodkit::volcore {

/// Normalized 1D Gaussian taps, truncated at `truncate` standard deviations.
std::vector<double> gaussian_kernel(double sigma, double truncate = 4.0);

/// Separable isotropic Gaussian smoothing with edge replication. Sigma in voxels;
/// sigma <= 0 returns the input unchanged.
Volume3D gaussian_filter(const Volume3D& v, double sigma, double truncate = 4.0);

/// Mean over a cubic window of odd edge, edge-replicated. Accumulates in double.
std::vector<double> box_mean(const std::vector<double>& field, const Dims& dims, int edge);

} // namespace moodkit::volcore

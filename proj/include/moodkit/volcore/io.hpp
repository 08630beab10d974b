#pragma once

#include <filesystem>

#include "moodkit/volcore/volume.hpp"

namespace moodkit::volcore {

// RVOL layout, little-endian:
//   "RVOL0001" | u32 nx ny nz | f32 sx sy sz | u8 dtype (0 = f32, 1 = u8) | payload, x-fastest
enum class RvolDtype : std::uint8_t { f32 = 0, u8 = 1 };

void write_rvol(const Volume3D& v, const std::filesystem::path& path);
void write_rvol(const BinaryMask3D& m, const std::filesystem::path& path, Spacing spacing = {1.0f, 1.0f, 1.0f});
Volume3D read_rvol(const std::filesystem::path& path);

/// Single-file NIfTI-1 (.nii, or .nii.gz). Reads datatypes uint8 (2), int16 (4)
/// and float32 (16); applies scl_slope/scl_inter, with slope 0 read as 1.
Volume3D read_nifti(const std::filesystem::path& path);
void write_nifti(const Volume3D& v, const std::filesystem::path& path);
void write_nifti(const BinaryMask3D& m, const std::filesystem::path& path, Spacing spacing = {1.0f, 1.0f, 1.0f});

/// Dispatch on extension: .nii / .nii.gz go through NIfTI, anything else is RVOL.
Volume3D read_volume(const std::filesystem::path& path);
void write_volume(const Volume3D& v, const std::filesystem::path& path);
void write_mask(const BinaryMask3D& m, const std::filesystem::path& path, Spacing spacing = {1.0f, 1.0f, 1.0f});

/// Reads a mask file; any nonzero voxel is true.
BinaryMask3D read_mask(const std::filesystem::path& path);

bool is_nifti_path(const std::filesystem::path& path);

} // namespace moodkit::volcore

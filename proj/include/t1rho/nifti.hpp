#pragma once

#include "t1rho/types.hpp"

#include <array>
#include <string>

namespace t1rho {

enum class NiftiDatatype : short {
  uint8 = 2,
  int16 = 4,
  uint16 = 512,
  float32 = 16,
  float64 = 64,
};

/// Reads a single-file NIfTI-1 volume (.nii, optionally gzip-compressed;
/// gzip is detected by magic bytes, not extension). The affine comes from
/// sform when sform_code > 0, else qform, else diag(spacing).
Volume read_volume(const std::string& path);

/// Writes a 348-byte NIfTI-1 header (magic "n+1", sform_code=1,
/// vox_offset=352) followed by the data. Paths ending in .gz are compressed.
void write_volume(const Volume& v, const std::string& path, NiftiDatatype datatype);

struct MaskSummary {
  std::array<std::size_t, 5> label_counts{};  // indexed by compartment code
};

/// Reads an integer-typed mask and validates it against the cartilage
/// codebook {0: background, 1: FC, 2: MTC, 3: LTC, 4: PC}.
LabelVolume read_mask(const std::string& path, MaskSummary* summary = nullptr);

LabelVolume to_label_volume(const Volume& v);
Volume from_label_volume(const LabelVolume& m);

}  // namespace t1rho

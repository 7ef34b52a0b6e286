#include "t1rho/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace t1rho {

namespace {

#pragma pack(push, 1)
struct NiftiHeader {
  int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  int32_t extents;
  int16_t session_error;
  char regular;
  char dim_info;
  int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  int16_t intent_code;
  int16_t datatype;
  int16_t bitpix;
  int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  int16_t qform_code;
  int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

bool is_gzip(const std::vector<uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<uint8_t> gunzip(const std::vector<uint8_t>& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw io_error("inflateInit failed");
  std::vector<uint8_t> out;
  out.reserve(in.size() * 4);
  std::vector<uint8_t> buf(1 << 16);
  zs.next_in = const_cast<uint8_t*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw io_error("gzip decompression failed");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<uint8_t> gzip_bytes(const std::vector<uint8_t>& in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw io_error("deflateInit failed");
  std::vector<uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<uint8_t*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  if (deflate(&zs, Z_FINISH) != Z_STREAM_END) {
    deflateEnd(&zs);
    throw io_error("gzip compression failed");
  }
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

int bytes_per_voxel(NiftiDatatype dt) {
  switch (dt) {
    case NiftiDatatype::uint8: return 1;
    case NiftiDatatype::int16: return 2;
    case NiftiDatatype::uint16: return 2;
    case NiftiDatatype::float32: return 4;
    case NiftiDatatype::float64: return 8;
  }
  throw io_error("unsupported datatype");
}

bool integer_datatype(NiftiDatatype dt) {
  return dt == NiftiDatatype::uint8 || dt == NiftiDatatype::int16 ||
         dt == NiftiDatatype::uint16;
}

Mat4 affine_from_qform(const NiftiHeader& h) {
  double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  double a2 = 1.0 - (b * b + c * c + d * d);
  double a = a2 > 0 ? std::sqrt(a2) : 0.0;
  Mat3 r;
  r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
      2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
      2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
  double qfac = (h.pixdim[0] < 0) ? -1.0 : 1.0;
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.col(0).head<3>() *= h.pixdim[1];
  m.col(1).head<3>() *= h.pixdim[2];
  m.col(2).head<3>() *= h.pixdim[3] * qfac;
  m.topRightCorner<3, 1>() = Vec3(h.qoffset_x, h.qoffset_y, h.qoffset_z);
  return m;
}

}  // namespace

Volume read_volume(const std::string& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  if (is_gzip(bytes)) bytes = gunzip(bytes);
  if (bytes.size() < sizeof(NiftiHeader)) throw io_error("header too short: " + path);

  NiftiHeader h{};
  std::memcpy(&h, bytes.data(), sizeof(h));
  if (h.sizeof_hdr != 348)
    throw io_error("bad sizeof_hdr (byte-swapped files are not supported): " + path);
  if (std::strncmp(h.magic, "n+1", 3) != 0 && std::strncmp(h.magic, "ni1", 3) != 0)
    throw io_error("bad magic field: " + path);
  if (std::strncmp(h.magic, "ni1", 3) == 0)
    throw io_error("two-file NIfTI (magic ni1) is not supported: " + path);
  if (h.dim[0] != 3 && h.dim[0] != 4)
    throw io_error("dim[0] must be 3 or 4, got " + std::to_string(h.dim[0]));
  if (h.dim[0] == 4 && h.dim[4] > 1)
    throw io_error("4-D volumes require a singleton fourth dim");

  NiftiDatatype dt;
  switch (h.datatype) {
    case 2: dt = NiftiDatatype::uint8; break;
    case 4: dt = NiftiDatatype::int16; break;
    case 512: dt = NiftiDatatype::uint16; break;
    case 16: dt = NiftiDatatype::float32; break;
    case 64: dt = NiftiDatatype::float64; break;
    default:
      throw io_error("unsupported datatype code " + std::to_string(h.datatype));
  }

  Vec3i dims(h.dim[1], h.dim[2], h.dim[3]);
  if ((dims.array() <= 0).any()) throw io_error("non-positive dim field");
  Vec3 spacing(h.pixdim[1], h.pixdim[2], h.pixdim[3]);

  Mat4 affine = Mat4::Identity();
  if (h.sform_code > 0) {
    for (int c = 0; c < 4; ++c) {
      affine(0, c) = h.srow_x[c];
      affine(1, c) = h.srow_y[c];
      affine(2, c) = h.srow_z[c];
    }
    // spacing must match the affine; trust the sform over pixdim
    for (int c = 0; c < 3; ++c) spacing[c] = affine.col(c).head<3>().norm();
  } else if (h.qform_code > 0) {
    affine = affine_from_qform(h);
  } else {
    affine.topLeftCorner<3, 3>() = spacing.asDiagonal();
  }

  std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::size_t offset = static_cast<std::size_t>(h.vox_offset);
  std::size_t need = offset + n * bytes_per_voxel(dt);
  if (bytes.size() < need) throw io_error("file truncated: " + path);

  Eigen::ArrayXd data(n);
  const uint8_t* p = bytes.data() + offset;
  switch (dt) {
    case NiftiDatatype::uint8:
      for (std::size_t i = 0; i < n; ++i) data[i] = p[i];
      break;
    case NiftiDatatype::int16: {
      const int16_t* q = reinterpret_cast<const int16_t*>(p);
      for (std::size_t i = 0; i < n; ++i) data[i] = q[i];
      break;
    }
    case NiftiDatatype::uint16: {
      const uint16_t* q = reinterpret_cast<const uint16_t*>(p);
      for (std::size_t i = 0; i < n; ++i) data[i] = q[i];
      break;
    }
    case NiftiDatatype::float32: {
      const float* q = reinterpret_cast<const float*>(p);
      for (std::size_t i = 0; i < n; ++i) data[i] = q[i];
      break;
    }
    case NiftiDatatype::float64: {
      const double* q = reinterpret_cast<const double*>(p);
      for (std::size_t i = 0; i < n; ++i) data[i] = q[i];
      break;
    }
  }
  if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f))
    data = data * static_cast<double>(h.scl_slope) + static_cast<double>(h.scl_inter);

  return Volume(dims, spacing, affine, std::move(data));
}

void write_volume(const Volume& v, const std::string& path, NiftiDatatype datatype) {
  v.validate();
  const std::size_t n = v.size();
  if (integer_datatype(datatype)) {
    for (std::size_t i = 0; i < n; ++i) {
      double val = v.data[i];
      if (val != std::floor(val))
        throw io_error("non-integral data cannot be written with an integer datatype");
      if (datatype == NiftiDatatype::uint8 && (val < 0 || val > 255))
        throw io_error("value out of uint8 range");
      if (datatype == NiftiDatatype::int16 && (val < -32768 || val > 32767))
        throw io_error("value out of int16 range");
      if (datatype == NiftiDatatype::uint16 && (val < 0 || val > 65535))
        throw io_error("value out of uint16 range");
    }
  }

  NiftiHeader h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<int16_t>(v.dims[0]);
  h.dim[2] = static_cast<int16_t>(v.dims[1]);
  h.dim[3] = static_cast<int16_t>(v.dims[2]);
  for (int i = 4; i < 8; ++i) h.dim[i] = 1;
  h.datatype = static_cast<int16_t>(datatype);
  h.bitpix = static_cast<int16_t>(8 * bytes_per_voxel(datatype));
  h.pixdim[0] = 1.0f;
  for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(v.spacing[i]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // millimetres
  h.sform_code = 1;
  h.qform_code = 0;
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(v.affine(0, c));
    h.srow_y[c] = static_cast<float>(v.affine(1, c));
    h.srow_z[c] = static_cast<float>(v.affine(2, c));
  }
  std::memcpy(h.magic, "n+1", 4);

  std::vector<uint8_t> bytes(352 + n * bytes_per_voxel(datatype), 0);
  std::memcpy(bytes.data(), &h, sizeof(h));
  uint8_t* p = bytes.data() + 352;
  switch (datatype) {
    case NiftiDatatype::uint8:
      for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<uint8_t>(v.data[i]);
      break;
    case NiftiDatatype::int16: {
      int16_t* q = reinterpret_cast<int16_t*>(p);
      for (std::size_t i = 0; i < n; ++i) q[i] = static_cast<int16_t>(v.data[i]);
      break;
    }
    case NiftiDatatype::uint16: {
      uint16_t* q = reinterpret_cast<uint16_t*>(p);
      for (std::size_t i = 0; i < n; ++i) q[i] = static_cast<uint16_t>(v.data[i]);
      break;
    }
    case NiftiDatatype::float32: {
      float* q = reinterpret_cast<float*>(p);
      for (std::size_t i = 0; i < n; ++i) q[i] = static_cast<float>(v.data[i]);
      break;
    }
    case NiftiDatatype::float64: {
      double* q = reinterpret_cast<double*>(p);
      for (std::size_t i = 0; i < n; ++i) q[i] = v.data[i];
      break;
    }
  }

  bool compress = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (compress) bytes = gzip_bytes(bytes);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open file for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw io_error("write failed: " + path);
}

LabelVolume read_mask(const std::string& path, MaskSummary* summary) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  if (is_gzip(bytes)) bytes = gunzip(bytes);
  if (bytes.size() < sizeof(NiftiHeader)) throw io_error("header too short: " + path);
  NiftiHeader h{};
  std::memcpy(&h, bytes.data(), sizeof(h));
  if (h.sizeof_hdr == 348 && (h.datatype == 16 || h.datatype == 64))
    throw io_error("mask must be integer-typed: " + path);

  Volume v = read_volume(path);
  LabelVolume mask = to_label_volume(v);
  MaskSummary counts{};
  for (Eigen::Index i = 0; i < mask.data.size(); ++i) {
    int val = mask.data[i];
    if (val < 0 || val > 4)
      throw io_error("unknown label " + std::to_string(val) + " in " + path);
    ++counts.label_counts[static_cast<std::size_t>(val)];
  }
  if (summary) *summary = counts;
  return mask;
}

LabelVolume to_label_volume(const Volume& v) {
  LabelVolume out;
  out.dims = v.dims;
  out.spacing = v.spacing;
  out.affine = v.affine;
  out.data.resize(v.data.size());
  for (Eigen::Index i = 0; i < v.data.size(); ++i) {
    double val = v.data[i];
    if (val != std::floor(val))
      throw numeric_error("label volume requires integral values");
    out.data[i] = static_cast<int>(val);
  }
  return out;
}

Volume from_label_volume(const LabelVolume& m) {
  Volume out;
  out.dims = m.dims;
  out.spacing = m.spacing;
  out.affine = m.affine;
  out.data = m.data.cast<double>();
  return out;
}

}  // namespace t1rho

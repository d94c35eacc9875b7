#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "airseg/postprocess.hpp"
#include "airseg/volume.hpp"

namespace airseg {

enum class VolDtype { f32, i16, u8 };

inline const char* dtype_name(VolDtype t) {
  switch (t) {
    case VolDtype::f32: return "f32";
    case VolDtype::i16: return "i16";
    default: return "u8";
  }
}

inline std::size_t dtype_size(VolDtype t) {
  switch (t) {
    case VolDtype::f32: return 4;
    case VolDtype::i16: return 2;
    default: return 1;
  }
}

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write file: ", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), "write failed: ", path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// RVOL1: text header (magic, dims, dtype, spacing), blank line, little-endian
// row-major (z,y,x) payload
// ---------------------------------------------------------------------------

struct RvolContents {
  Dims dims;
  Spacing spacing;
  VolDtype dtype = VolDtype::f32;
  std::vector<float> values;
};

namespace detail {

inline std::string rvol_header(Dims dims, Spacing spacing, VolDtype dtype) {
  std::ostringstream os;
  os << "RVOL1\n";
  os << "dims: " << dims.d << " " << dims.h << " " << dims.w << "\n";
  os << "dtype: " << dtype_name(dtype) << "\n";
  os.precision(17);
  os << "spacing: " << spacing.z << " " << spacing.y << " " << spacing.x << "\n";
  os << "\n";
  return os.str();
}

template <typename Get>
std::string rvol_bytes(Dims dims, Spacing spacing, VolDtype dtype, std::size_t n,
                       Get&& get) {
  std::string out = rvol_header(dims, spacing, dtype);
  out.reserve(out.size() + n * dtype_size(dtype));
  for (std::size_t i = 0; i < n; ++i) {
    const float v = get(i);
    switch (dtype) {
      case VolDtype::f32:
        put_u32(out, std::bit_cast<std::uint32_t>(v));
        break;
      case VolDtype::i16: {
        const float r = std::clamp(std::round(v), -32768.0f, 32767.0f);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(r)));
        break;
      }
      case VolDtype::u8:
        out.push_back(static_cast<char>(static_cast<std::uint8_t>(
            std::clamp(std::round(v), 0.0f, 255.0f))));
        break;
    }
  }
  return out;
}

}  // namespace detail

inline void write_volume(const Volume& v, const std::string& path,
                         VolDtype dtype = VolDtype::i16) {
  detail::write_file(path, detail::rvol_bytes(v.dims, v.spacing, dtype,
                                              v.values.size(),
                                              [&](std::size_t i) { return v.values[i]; }));
}

inline void write_mask(const Mask& m, const std::string& path) {
  detail::write_file(path, detail::rvol_bytes(m.dims, m.spacing, VolDtype::u8,
                                              m.values.size(), [&](std::size_t i) {
                                                return static_cast<float>(m.values[i]);
                                              }));
}

inline void write_probability(const ProbabilityVolume& p, const std::string& path) {
  detail::write_file(path, detail::rvol_bytes(p.dims, p.spacing, VolDtype::f32,
                                              p.values.size(),
                                              [&](std::size_t i) { return p.values[i]; }));
}

inline void write_labels(const LabelMap& lm, const std::string& path) {
  require(lm.component_sizes.size() <= 32767,
          "label map has too many components for i16 storage");
  detail::write_file(path, detail::rvol_bytes(lm.dims, lm.spacing, VolDtype::i16,
                                              lm.values.size(), [&](std::size_t i) {
                                                return static_cast<float>(lm.values[i]);
                                              }));
}

inline RvolContents read_rvol(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  std::istringstream in(bytes);
  std::string line;

  require(static_cast<bool>(std::getline(in, line)), path, ": empty file");
  require(line == "RVOL1", path, ": bad magic line '", line, "', expected RVOL1");

  RvolContents rc;
  require(static_cast<bool>(std::getline(in, line)), path, ": missing dims line");
  {
    std::istringstream ls(line);
    std::string key;
    ls >> key >> rc.dims.d >> rc.dims.h >> rc.dims.w;
    require(key == "dims:" && !ls.fail(), path, ": malformed dims line '", line, "'");
    require(rc.dims.d > 0 && rc.dims.h > 0 && rc.dims.w > 0, path,
            ": dims must be positive, got ", rc.dims.d, " ", rc.dims.h, " ", rc.dims.w);
  }
  require(static_cast<bool>(std::getline(in, line)), path, ": missing dtype line");
  {
    std::istringstream ls(line);
    std::string key, name;
    ls >> key >> name;
    require(key == "dtype:" && !ls.fail(), path, ": malformed dtype line '", line, "'");
    if (name == "f32")
      rc.dtype = VolDtype::f32;
    else if (name == "i16")
      rc.dtype = VolDtype::i16;
    else if (name == "u8")
      rc.dtype = VolDtype::u8;
    else
      fail(path, ": unknown dtype '", name, "'");
  }
  require(static_cast<bool>(std::getline(in, line)), path, ": missing spacing line");
  {
    std::istringstream ls(line);
    std::string key;
    ls >> key >> rc.spacing.z >> rc.spacing.y >> rc.spacing.x;
    require(key == "spacing:" && !ls.fail(), path, ": malformed spacing line '", line, "'");
  }
  require(static_cast<bool>(std::getline(in, line)) && line.empty(), path,
          ": header must end with a blank line");

  const std::size_t payload_at = static_cast<std::size_t>(in.tellg());
  const std::size_t n = rc.dims.numel();
  const std::size_t need = n * dtype_size(rc.dtype);
  require(bytes.size() >= payload_at, path, ": truncated header");
  const std::size_t have = bytes.size() - payload_at;
  require(have == need, path, ": payload holds ", have, " bytes, header dims need ",
          need);

  rc.values.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + payload_at;
  switch (rc.dtype) {
    case VolDtype::f32:
      for (std::size_t i = 0; i < n; ++i)
        rc.values[i] = std::bit_cast<float>(detail::get_u32(p + 4 * i));
      break;
    case VolDtype::i16:
      for (std::size_t i = 0; i < n; ++i)
        rc.values[i] = static_cast<float>(
            static_cast<std::int16_t>(detail::get_u16(p + 2 * i)));
      break;
    case VolDtype::u8:
      for (std::size_t i = 0; i < n; ++i) rc.values[i] = static_cast<float>(p[i]);
      break;
  }
  return rc;
}

inline Volume read_volume(const std::string& path) {
  RvolContents rc = read_rvol(path);
  Volume v;
  v.dims = rc.dims;
  v.spacing = rc.spacing;
  v.values = std::move(rc.values);
  return v;
}

inline Mask read_mask(const std::string& path) {
  RvolContents rc = read_rvol(path);
  require(rc.dtype == VolDtype::u8, path, ": mask files must be dtype u8, got ",
          dtype_name(rc.dtype));
  Mask m;
  m.dims = rc.dims;
  m.spacing = rc.spacing;
  m.values.resize(rc.values.size());
  for (std::size_t i = 0; i < rc.values.size(); ++i) {
    require(rc.values[i] == 0.0f || rc.values[i] == 1.0f, path,
            ": mask voxel ", i, " is ", rc.values[i], ", masks must be binary");
    m.values[i] = rc.values[i] != 0.0f ? 1 : 0;
  }
  return m;
}

inline ProbabilityVolume read_probability(const std::string& path) {
  RvolContents rc = read_rvol(path);
  require(rc.dtype == VolDtype::f32, path,
          ": probability files must be dtype f32, got ", dtype_name(rc.dtype));
  ProbabilityVolume p;
  p.dims = rc.dims;
  p.spacing = rc.spacing;
  p.values = std::move(rc.values);
  return p;
}

// ---------------------------------------------------------------------------
// NIfTI-1 reader: uncompressed single-file volumes, int16 or float32,
// 3D only; opposite-endian files are byte-swapped on load
// ---------------------------------------------------------------------------

inline Volume read_nifti(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  require(bytes.size() >= 352, path, ": file too short for a NIfTI-1 header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

  auto u32_at = [&](std::size_t off, bool swap) {
    std::uint32_t v = detail::get_u32(p + off);
    if (swap) v = __builtin_bswap32(v);
    return v;
  };
  auto u16_at = [&](std::size_t off, bool swap) {
    std::uint16_t v = detail::get_u16(p + off);
    if (swap) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
    return v;
  };

  bool swap = false;
  const std::uint32_t hdr = u32_at(0, false);
  if (hdr == 348u) {
    swap = false;
  } else if (__builtin_bswap32(hdr) == 348u) {
    swap = true;
  } else {
    fail(path, ": sizeof_hdr is ", hdr, ", expected 348 (either endianness)");
  }

  const char* magic = bytes.data() + 344;
  if (std::memcmp(magic, "ni1", 4) == 0)
    fail(path, ": two-file NIfTI form (magic ni1) is not supported");
  require(std::memcmp(magic, "n+1", 4) == 0, path, ": magic field is not n+1");

  auto i16_at = [&](std::size_t off) {
    return static_cast<std::int16_t>(u16_at(off, swap));
  };
  auto f32_at = [&](std::size_t off) {
    return std::bit_cast<float>(u32_at(off, swap));
  };

  const std::int16_t ndim = i16_at(40);
  require(ndim == 3, path, ": dim[0] is ", ndim, ", only 3D volumes are supported");
  const int nx = i16_at(42), ny = i16_at(44), nz = i16_at(46);
  require(nx > 0 && ny > 0 && nz > 0, path, ": non-positive extent in dim[]");

  const std::int16_t datatype = i16_at(70);
  require(datatype == 4 || datatype == 16, path, ": datatype code ", datatype,
          " unsupported (int16=4 and float32=16 only)");
  const std::size_t elem = datatype == 4 ? 2 : 4;

  const float vox_offset = f32_at(108);
  float slope = f32_at(112);
  const float inter = f32_at(116);
  if (slope == 0.0f) slope = 1.0f;

  require(vox_offset >= 348.0f, path, ": vox_offset ", vox_offset, " overlaps the header");
  const std::size_t data_at = static_cast<std::size_t>(vox_offset);
  const std::size_t n =
      static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  require(bytes.size() >= data_at + n * elem, path, ": payload truncated, need ",
          n * elem, " bytes at offset ", data_at);

  Volume v;
  v.dims = {nz, ny, nx};  // fastest-varying stored axis becomes W
  v.spacing = {f32_at(76 + 3 * 4), f32_at(76 + 2 * 4), f32_at(76 + 1 * 4)};
  v.values.resize(n);
  const auto* d = p + data_at;
  if (datatype == 4) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t raw = detail::get_u16(d + 2 * i);
      if (swap) raw = static_cast<std::uint16_t>((raw >> 8) | (raw << 8));
      v.values[i] = static_cast<float>(static_cast<std::int16_t>(raw)) * slope + inter;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t raw = detail::get_u32(d + 4 * i);
      if (swap) raw = __builtin_bswap32(raw);
      v.values[i] = std::bit_cast<float>(raw) * slope + inter;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// PGM montage export: one P5 image per every_k-th axial slice
// ---------------------------------------------------------------------------

namespace detail {

inline std::string pgm_bytes(int h, int w, const std::vector<std::uint8_t>& pix) {
  std::ostringstream os;
  os << "P5\n" << w << " " << h << "\n255\n";
  std::string out = os.str();
  out.append(reinterpret_cast<const char*>(pix.data()), pix.size());
  return out;
}

inline std::string montage_path(const std::string& prefix, int z) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_z%04d.pgm", z);
  return prefix + buf;
}

template <typename PixelOf>
std::vector<std::string> export_slices(Dims dims, const std::string& prefix,
                                       int every_k, PixelOf&& pixel) {
  require(every_k >= 1, "montage every_k must be >= 1, got ", every_k);
  std::vector<std::string> written;
  const std::size_t plane = static_cast<std::size_t>(dims.h) * dims.w;
  std::vector<std::uint8_t> pix(plane);
  for (int z = 0; z < dims.d; z += every_k) {
    for (std::size_t i = 0; i < plane; ++i)
      pix[i] = pixel(static_cast<std::size_t>(z) * plane + i);
    const std::string path = montage_path(prefix, z);
    write_file(path, pgm_bytes(dims.h, dims.w, pix));
    written.push_back(path);
  }
  return written;
}

}  // namespace detail

// min-max windowed; a constant volume renders mid-gray
inline std::vector<std::string> export_montage(const Volume& v,
                                               const std::string& prefix,
                                               int every_k = 1) {
  const auto [lo_it, hi_it] = std::minmax_element(v.values.begin(), v.values.end());
  const float lo = *lo_it, hi = *hi_it;
  const float span = hi - lo;
  return detail::export_slices(v.dims, prefix, every_k, [&](std::size_t i) {
    if (span <= 0.0f) return static_cast<std::uint8_t>(128);
    return static_cast<std::uint8_t>(
        std::clamp(std::round((v.values[i] - lo) / span * 255.0f), 0.0f, 255.0f));
  });
}

inline std::vector<std::string> export_montage(const Mask& m,
                                               const std::string& prefix,
                                               int every_k = 1) {
  return detail::export_slices(m.dims, prefix, every_k, [&](std::size_t i) {
    return static_cast<std::uint8_t>(m.values[i] ? 255 : 0);
  });
}

// distinct gray per label, background black
inline std::vector<std::string> export_montage(const LabelMap& lm,
                                               const std::string& prefix,
                                               int every_k = 1) {
  const int k = lm.component_count();
  return detail::export_slices(lm.dims, prefix, every_k, [&](std::size_t i) {
    const std::int32_t l = lm.values[i];
    if (l == 0 || k == 0) return static_cast<std::uint8_t>(0);
    return static_cast<std::uint8_t>(55 + (200 * (k - l + 1)) / k);
  });
}

}  // namespace airseg

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strokepred/core.hpp"

namespace strokepred {

enum class MapKind { Adc, Mtt, Ttp, Tmax, Rcbv, Rcbf, Mask, Feature };

// The six parametric maps in canonical order. This order also fixes the
// channel order everywhere a full case is stacked.
inline constexpr std::array<MapKind, 6> kParametricKinds = {
    MapKind::Adc, MapKind::Mtt, MapKind::Ttp,
    MapKind::Tmax, MapKind::Rcbv, MapKind::Rcbf};

inline const char* kind_name(MapKind k) {
  switch (k) {
    case MapKind::Adc: return "ADC";
    case MapKind::Mtt: return "MTT";
    case MapKind::Ttp: return "TTP";
    case MapKind::Tmax: return "TMAX";
    case MapKind::Rcbv: return "RCBV";
    case MapKind::Rcbf: return "RCBF";
    case MapKind::Mask: return "MASK";
    case MapKind::Feature: return "FEAT";
  }
  return "?";
}

inline MapKind parse_kind(const std::string& s) {
  for (MapKind k : kParametricKinds)
    if (s == kind_name(k)) return k;
  if (s == "MASK") return MapKind::Mask;
  if (s == "FEAT") return MapKind::Feature;
  throw DataError("unknown map kind: " + s);
}

// Dense 3D scalar grid, x-fastest, with physical voxel spacing in mm.
struct Volume {
  Dims3 dims;
  std::array<double, 3> spacing_mm = {1.0, 1.0, 1.0};
  MapKind kind = MapKind::Feature;
  std::vector<float> data;

  Volume() = default;
  Volume(Dims3 d, MapKind k, std::array<double, 3> sp = {1.0, 1.0, 1.0})
      : dims(d), spacing_mm(sp), kind(k), data(d.voxels(), 0.0f) {}

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims.y + y) * dims.x + x;
  }
  float at(int x, int y, int z) const { return data[index(x, y, z)]; }
  float& at(int x, int y, int z) { return data[index(x, y, z)]; }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && x < dims.x && y >= 0 && y < dims.y && z >= 0 && z < dims.z;
  }

  void validate() const {
    if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
      throw DataError("volume dims must be positive");
    if (spacing_mm[0] <= 0 || spacing_mm[1] <= 0 || spacing_mm[2] <= 0)
      throw DataError("voxel spacing must be positive");
    if (data.size() != dims.voxels())
      throw DataError("volume data length does not match dims");
    if (kind == MapKind::Mask) {
      for (float v : data)
        if (v != 0.0f && v != 1.0f)
          throw DataError("mask volume holds a value outside {0,1}");
    }
  }
};

// One subject: the six parametric maps (canonical order), optional ground
// truth, and the geometry the case had before any resizing.
struct PatientCase {
  std::string case_id;
  std::vector<Volume> maps;  // size 6, kParametricKinds order
  std::optional<Volume> gt;
  Dims3 original_dims;
  std::array<double, 3> original_spacing = {1.0, 1.0, 1.0};

  const Volume& map(MapKind k) const {
    for (const Volume& v : maps)
      if (v.kind == k) return v;
    throw DataError(case_id + ": missing parametric map " + kind_name(k));
  }

  void validate() const {
    if (maps.size() != kParametricKinds.size())
      throw DataError(case_id + ": expected 6 parametric maps, got " +
                      std::to_string(maps.size()));
    for (std::size_t i = 0; i < maps.size(); ++i) {
      maps[i].validate();
      if (maps[i].kind != kParametricKinds[i])
        throw DataError(case_id + ": maps out of canonical order");
      if (!(maps[i].dims == maps[0].dims))
        throw DataError(case_id + ": maps disagree on dims");
      if (maps[i].spacing_mm != maps[0].spacing_mm)
        throw DataError(case_id + ": maps disagree on spacing");
    }
    if (gt) {
      gt->validate();
      if (!(gt->dims == maps[0].dims))
        throw DataError(case_id + ": ground truth dims mismatch");
      if (gt->kind != MapKind::Mask)
        throw DataError(case_id + ": ground truth must be a mask");
    }
  }
};

// A case after resizing to the working grid, clipping and [0,255] rescale.
struct PreprocessedCase {
  std::string case_id;
  std::vector<Volume> maps;
  std::optional<Volume> gt;
  Dims3 original_dims;
  std::array<double, 3> original_spacing = {1.0, 1.0, 1.0};
};

// Channel-major patch block: data[((c*pz + z)*py + y)*px + x].
struct Patch {
  Dims3 center;
  Dims3 shape;
  std::vector<MapKind> channels;
  std::vector<float> data;
};

enum class ResizeMode { Trilinear, Nearest };

// Resamples to target dims. Pixel-center coordinate mapping, so an exact
// integer upscale in nearest mode replicates values block-wise and resizing
// to the same dims is the identity. Spacing is rescaled to keep the
// physical extent.
inline Volume resize_volume(const Volume& vol, Dims3 target, ResizeMode mode) {
  if (target.x < 1 || target.y < 1 || target.z < 1)
    throw DataError("resize target dims must be >= 1");
  Volume out;
  out.dims = target;
  out.kind = vol.kind;
  out.spacing_mm = {vol.spacing_mm[0] * vol.dims.x / target.x,
                    vol.spacing_mm[1] * vol.dims.y / target.y,
                    vol.spacing_mm[2] * vol.dims.z / target.z};
  out.data.resize(target.voxels());

  const auto src_coord = [](int dst, int src_n, int dst_n) {
    return (dst + 0.5) * src_n / dst_n - 0.5;
  };

  if (mode == ResizeMode::Nearest) {
    std::vector<int> mx(target.x), my(target.y), mz(target.z);
    const auto nearest = [&](int dst, int src_n, int dst_n) {
      int i = static_cast<int>(std::floor((dst + 0.5) * src_n /
                                          static_cast<double>(dst_n)));
      return std::clamp(i, 0, src_n - 1);
    };
    for (int x = 0; x < target.x; ++x) mx[x] = nearest(x, vol.dims.x, target.x);
    for (int y = 0; y < target.y; ++y) my[y] = nearest(y, vol.dims.y, target.y);
    for (int z = 0; z < target.z; ++z) mz[z] = nearest(z, vol.dims.z, target.z);
    std::size_t o = 0;
    for (int z = 0; z < target.z; ++z)
      for (int y = 0; y < target.y; ++y)
        for (int x = 0; x < target.x; ++x, ++o)
          out.data[o] = vol.at(mx[x], my[y], mz[z]);
    return out;
  }

  struct Lin {
    int i0, i1;
    float w1;
  };
  const auto axis = [&](int dst_n, int src_n) {
    std::vector<Lin> m(dst_n);
    for (int d = 0; d < dst_n; ++d) {
      double c = std::clamp(src_coord(d, src_n, dst_n), 0.0,
                            static_cast<double>(src_n - 1));
      int i0 = static_cast<int>(std::floor(c));
      i0 = std::min(i0, src_n - 1);
      m[d] = {i0, std::min(i0 + 1, src_n - 1), static_cast<float>(c - i0)};
    }
    return m;
  };
  const auto ax = axis(target.x, vol.dims.x);
  const auto ay = axis(target.y, vol.dims.y);
  const auto az = axis(target.z, vol.dims.z);
  std::size_t o = 0;
  for (int z = 0; z < target.z; ++z) {
    for (int y = 0; y < target.y; ++y) {
      for (int x = 0; x < target.x; ++x, ++o) {
        const Lin &lx = ax[x], &ly = ay[y], &lz = az[z];
        float acc = 0.0f;
        for (int dz = 0; dz < 2; ++dz) {
          const float wz = dz ? lz.w1 : 1.0f - lz.w1;
          if (wz == 0.0f) continue;
          for (int dy = 0; dy < 2; ++dy) {
            const float wy = dy ? ly.w1 : 1.0f - ly.w1;
            if (wy == 0.0f) continue;
            for (int dx = 0; dx < 2; ++dx) {
              const float wx = dx ? lx.w1 : 1.0f - lx.w1;
              if (wx == 0.0f) continue;
              acc += wz * wy * wx *
                     vol.at(dx ? lx.i1 : lx.i0, dy ? ly.i1 : ly.i0,
                            dz ? lz.i1 : lz.i0);
            }
          }
        }
        out.data[o] = acc;
      }
    }
  }
  return out;
}

// Biologically meaningful ranges: ADC in [0, 2600]e-6 mm^2/s, Tmax in
// [0, 20] s. Other kinds pass through unchanged.
inline Volume clip_map(const Volume& vol) {
  Volume out = vol;
  float lo = 0.0f, hi = 0.0f;
  if (vol.kind == MapKind::Adc) {
    hi = 2600.0e-6f;
  } else if (vol.kind == MapKind::Tmax) {
    hi = 20.0f;
  } else {
    return out;
  }
  for (float& v : out.data) v = std::clamp(v, lo, hi);
  return out;
}

// Affine min/max rescale to [lo, hi]. A constant volume maps entirely to lo.
inline Volume rescale_linear(const Volume& vol, float lo, float hi) {
  if (!(hi > lo)) throw DataError("rescale_linear requires hi > lo");
  Volume out = vol;
  const auto [mn_it, mx_it] = std::minmax_element(vol.data.begin(), vol.data.end());
  const float mn = vol.data.empty() ? 0.0f : *mn_it;
  const float mx = vol.data.empty() ? 0.0f : *mx_it;
  if (mx <= mn) {
    std::fill(out.data.begin(), out.data.end(), lo);
    return out;
  }
  const float scale = (hi - lo) / (mx - mn);
  for (float& v : out.data) v = lo + (v - mn) * scale;
  return out;
}

// Resize (trilinear maps, nearest gt) to the target grid, then clip and
// rescale each map to [0, 255].
inline PreprocessedCase preprocess_case(const PatientCase& c,
                                        Dims3 target = {256, 256, 32}) {
  c.validate();
  PreprocessedCase out;
  out.case_id = c.case_id;
  out.original_dims = c.maps[0].dims;
  out.original_spacing = c.maps[0].spacing_mm;
  out.maps.reserve(c.maps.size());
  for (const Volume& m : c.maps) {
    Volume v = resize_volume(m, target, ResizeMode::Trilinear);
    v = clip_map(v);
    out.maps.push_back(rescale_linear(v, 0.0f, 255.0f));
  }
  if (c.gt) out.gt = resize_volume(*c.gt, target, ResizeMode::Nearest);
  return out;
}

// Extracts a channel-major block centered on a voxel. Voxels outside the
// volume contribute 0. The block spans center - (shape-1)/2 .. + shape/2
// per axis (integer division), which reduces to the symmetric window for
// odd shapes.
inline Patch extract_patch(const std::vector<const Volume*>& maps, Dims3 center,
                           Dims3 shape) {
  if (maps.empty()) throw DataError("extract_patch: no maps given");
  const Dims3 dims = maps[0]->dims;
  for (const Volume* m : maps)
    if (!(m->dims == dims)) throw DataError("extract_patch: dims mismatch");
  if (center.x < 0 || center.x >= dims.x || center.y < 0 ||
      center.y >= dims.y || center.z < 0 || center.z >= dims.z)
    throw DataError("extract_patch: center outside volume bounds");

  Patch p;
  p.center = center;
  p.shape = shape;
  p.channels.reserve(maps.size());
  p.data.resize(shape.voxels() * maps.size(), 0.0f);
  const int x0 = center.x - (shape.x - 1) / 2;
  const int y0 = center.y - (shape.y - 1) / 2;
  const int z0 = center.z - (shape.z - 1) / 2;
  std::size_t o = 0;
  for (const Volume* m : maps) {
    p.channels.push_back(m->kind);
    for (int dz = 0; dz < shape.z; ++dz) {
      const int z = z0 + dz;
      for (int dy = 0; dy < shape.y; ++dy) {
        const int y = y0 + dy;
        for (int dx = 0; dx < shape.x; ++dx, ++o) {
          const int x = x0 + dx;
          if (m->in_bounds(x, y, z)) p.data[o] = m->at(x, y, z);
        }
      }
    }
  }
  return p;
}

// Rotates a square multi-channel 2D patch by k*90 degrees,
// out(y, x) = in(n-1-x, y) applied k times, same k for every channel.
inline Patch rotate90(const Patch& patch, int k) {
  if (patch.shape.z != 1)
    throw DataError("rotate90 expects a 2D patch (z extent 1)");
  if (patch.shape.x != patch.shape.y)
    throw DataError("rotate90 expects a square patch");
  k = ((k % 4) + 4) % 4;
  Patch out = patch;
  const int n = patch.shape.x;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  std::vector<float> tmp(plane);
  for (std::size_t c = 0; c < patch.channels.size(); ++c) {
    float* chan = out.data.data() + c * plane;
    for (int r = 0; r < k; ++r) {
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          tmp[static_cast<std::size_t>(y) * n + x] =
              chan[static_cast<std::size_t>(n - 1 - x) * n + y];
      std::copy(tmp.begin(), tmp.end(), chan);
    }
  }
  return out;
}

inline std::vector<Dims3> lesion_voxels(const Volume& gt) {
  std::vector<Dims3> out;
  std::size_t i = 0;
  for (int z = 0; z < gt.dims.z; ++z)
    for (int y = 0; y < gt.dims.y; ++y)
      for (int x = 0; x < gt.dims.x; ++x, ++i)
        if (gt.data[i] != 0.0f) out.push_back({x, y, z});
  return out;
}

// Voxels where at least one parametric map is nonzero (skull-stripped data
// is zero outside the brain).
inline std::vector<Dims3> brain_voxels(const PreprocessedCase& c) {
  std::vector<Dims3> out;
  const Dims3 dims = c.maps.at(0).dims;
  std::size_t i = 0;
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x, ++i) {
        for (const Volume& m : c.maps) {
          if (m.data[i] != 0.0f) {
            out.push_back({x, y, z});
            break;
          }
        }
      }
  return out;
}

// Draws n patch centers: half uniformly from lesion voxels, half uniformly
// from nonzero-brain voxels (all from brain when the lesion is empty).
// Deterministic for a fixed seed.
inline std::vector<Dims3> sample_training_patches(const PreprocessedCase& c,
                                                  std::size_t n,
                                                  std::uint64_t seed) {
  if (!c.gt) throw DataError(c.case_id + ": patch sampling needs ground truth");
  const std::vector<Dims3> lesion = lesion_voxels(*c.gt);
  const std::vector<Dims3> brain = brain_voxels(c);
  if (brain.empty())
    throw DataError(c.case_id + ": no nonzero voxels to sample from");
  Rng rng(seed);
  std::vector<Dims3> centers;
  centers.reserve(n);
  const std::size_t n_lesion = lesion.empty() ? 0 : n / 2;
  for (std::size_t i = 0; i < n_lesion; ++i)
    centers.push_back(lesion[rng.uniform_int(lesion.size())]);
  for (std::size_t i = n_lesion; i < n; ++i)
    centers.push_back(brain[rng.uniform_int(brain.size())]);
  return centers;
}

}  // namespace strokepred

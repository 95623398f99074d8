#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "strokepred/volume.hpp"

namespace strokepred {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// On-disk case layout: one directory per case holding meta.json plus one
// little-endian raw file per map (ADC.f32, ..., RCBF.f32; x-fastest float32)
// and an optional GT.u8 mask of {0,1} bytes.

inline void write_file_atomic(const fs::path& path, const void* data,
                              std::size_t bytes) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for write: " + tmp.string());
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!f) throw DataError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

inline std::vector<char> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw DataError("cannot open: " + path.string());
  const std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(n));
  f.read(buf.data(), n);
  if (!f) throw DataError("short read: " + path.string());
  return buf;
}

inline void save_raw_f32(const fs::path& path, const std::vector<float>& v) {
  write_file_atomic(path, v.data(), v.size() * sizeof(float));
}

inline std::vector<float> load_raw_f32(const fs::path& path, std::size_t count) {
  const auto buf = read_file(path);
  if (buf.size() != count * sizeof(float))
    throw DataError(path.string() + ": expected " +
                    std::to_string(count * sizeof(float)) + " bytes, got " +
                    std::to_string(buf.size()));
  std::vector<float> v(count);
  std::memcpy(v.data(), buf.data(), buf.size());
  return v;
}

inline void save_case(const fs::path& dir, const PatientCase& c) {
  c.validate();
  fs::create_directories(dir);
  json meta;
  meta["case_id"] = c.case_id;
  meta["dims"] = {c.maps[0].dims.x, c.maps[0].dims.y, c.maps[0].dims.z};
  meta["spacing_mm"] = {c.maps[0].spacing_mm[0], c.maps[0].spacing_mm[1],
                        c.maps[0].spacing_mm[2]};
  json kinds = json::array();
  for (const Volume& m : c.maps) kinds.push_back(kind_name(m.kind));
  meta["maps"] = kinds;
  meta["gt"] = c.gt.has_value();
  meta["dtype"] = "f32";
  write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");
  for (const Volume& m : c.maps)
    save_raw_f32(dir / (std::string(kind_name(m.kind)) + ".f32"), m.data);
  if (c.gt) {
    std::vector<std::uint8_t> bytes(c.gt->data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
      bytes[i] = c.gt->data[i] != 0.0f ? 1 : 0;
    write_file_atomic(dir / "GT.u8", bytes.data(), bytes.size());
  }
}

inline PatientCase load_case(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path))
    throw DataError("not a case directory (no meta.json): " + dir.string());
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  PatientCase c;
  c.case_id = meta.value("case_id", dir.filename().string());
  Dims3 dims{meta.at("dims").at(0).get<int>(), meta.at("dims").at(1).get<int>(),
             meta.at("dims").at(2).get<int>()};
  std::array<double, 3> sp{meta.at("spacing_mm").at(0).get<double>(),
                           meta.at("spacing_mm").at(1).get<double>(),
                           meta.at("spacing_mm").at(2).get<double>()};
  for (MapKind k : kParametricKinds) {
    Volume v(dims, k, sp);
    v.data = load_raw_f32(dir / (std::string(kind_name(k)) + ".f32"),
                          dims.voxels());
    c.maps.push_back(std::move(v));
  }
  if (meta.value("gt", false)) {
    const auto buf = read_file(dir / "GT.u8");
    if (buf.size() != dims.voxels())
      throw DataError(dir.string() + ": GT.u8 size mismatch");
    Volume gt(dims, MapKind::Mask, sp);
    for (std::size_t i = 0; i < buf.size(); ++i)
      gt.data[i] = buf[i] ? 1.0f : 0.0f;
    c.gt = std::move(gt);
  }
  c.original_dims = dims;
  c.original_spacing = sp;
  c.validate();
  return c;
}

// Case ids are the sorted names of subdirectories holding a meta.json.
inline std::vector<std::string> list_cases(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir))
    throw DataError("dataset directory not found: " + data_dir.string());
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(data_dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json"))
      ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct Manifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

inline void save_manifest(const fs::path& data_dir, const Manifest& m) {
  json j;
  j["train"] = m.train;
  j["val"] = m.val;
  write_text_atomic(data_dir / "manifest.json", j.dump(2) + "\n");
}

// Falls back to "every case is a training case" when no manifest exists.
inline Manifest load_manifest(const fs::path& data_dir) {
  Manifest m;
  const fs::path p = data_dir / "manifest.json";
  if (!fs::exists(p)) {
    m.train = list_cases(data_dir);
    return m;
  }
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
  m.train = j.at("train").get<std::vector<std::string>>();
  m.val = j.value("val", std::vector<std::string>{});
  return m;
}

// Cached feature volumes live in a mirror of the case directory under the
// run's output tree, never next to the inputs.
inline fs::path feature_path(const fs::path& features_dir,
                             const std::string& case_id,
                             const std::string& group, int unit) {
  return features_dir / case_id /
         ("FEAT_" + group + "_" + std::to_string(unit) + ".f32");
}

}  // namespace strokepred

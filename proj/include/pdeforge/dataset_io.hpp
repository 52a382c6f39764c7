// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdeforge/crc32.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/grid.hpp"
#include "pdeforge/operators.hpp"

namespace pdeforge {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kDtype = "float64-le";
inline constexpr const char* kLayout = "sample-major,row-major-nodes-including-boundary";
inline constexpr const char* kManifestName = "manifest.json";

/// One dataset entry: PDE coefficients a_k, forcing f_k, solution u_k.
struct SampleTriple {
  PdeCoefficients coefficients;
  FieldSample forcing;
  FieldSample solution;
};

/// Field files stored for a PDE family: coefficients, then "f", then "u".
inline std::vector<std::string> dataset_field_names(PdeKind kind) {
  auto names = coefficient_field_names(kind);
  names.push_back("f");
  names.push_back("u");
  return names;
}

struct FieldFileInfo {
  std::string filename;
  std::uint64_t byte_length = 0;
  std::uint32_t crc32 = 0;
  friend bool operator==(const FieldFileInfo&, const FieldFileInfo&) = default;
};

struct GenerationInfo {
  std::uint64_t master_seed = 0;
  double solver_tol = 0.0;
  std::size_t n_basis = 0;
  double noise_eta = 0.0;
  double delta = 0.0;
  nlohmann::json field_params = nlohmann::json::object();
  std::string sign_convention;
  std::map<std::string, double> timings;
};

struct DatasetManifest {
  int format_version = kFormatVersion;
  PdeKind pde = PdeKind::Darcy;
  std::size_t grid_interior = 0;
  std::size_t num_samples = 0;
  std::string method;
  std::map<std::string, FieldFileInfo> field_files;
  std::string dtype = kDtype;
  std::string layout = kLayout;
  GenerationInfo generation;
  std::vector<std::size_t> skipped_samples;
  nlohmann::json debug;  ///< null unless debug logging was requested

  std::uint64_t slab_bytes() const noexcept {
    const auto p = static_cast<std::uint64_t>(grid_interior + 2);
    return p * p * 8;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format_version"] = format_version;
    j["pde"] = std::string(to_string(pde));
    j["grid_interior"] = grid_interior;
    j["num_samples"] = num_samples;
    j["method"] = method;
    auto& ff = j["field_files"] = nlohmann::json::object();
    for (const auto& [name, info] : field_files)
      ff[name] = {{"filename", info.filename}, {"byte_length", info.byte_length}, {"crc32", info.crc32}};
    j["dtype"] = dtype;
    j["layout"] = layout;
    j["generation"] = {{"master_seed", generation.master_seed},
                       {"solver_tol", generation.solver_tol},
                       {"n_basis", generation.n_basis},
                       {"noise_eta", generation.noise_eta},
                       {"delta", generation.delta},
                       {"field_params", generation.field_params},
                       {"sign_convention", generation.sign_convention},
                       {"timings", generation.timings}};
    j["skipped_samples"] = skipped_samples;
    if (!debug.is_null()) j["debug"] = debug;
    return j;
  }

  /// Parses and structurally validates a manifest. Malformed input raises
  /// IntegrityError / VersionError, never a json exception.
  static DatasetManifest from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
      if (!j.is_object()) throw IntegrityError(kManifestName, 0, "manifest is not a JSON object");
      m.format_version = j.at("format_version").get<int>();
      if (m.format_version != kFormatVersion)
        throw VersionError("unsupported dataset format_version " + std::to_string(m.format_version) +
                           " (this build reads version " + std::to_string(kFormatVersion) + ")");
      try {
        m.pde = parse_pde_kind(j.at("pde").get<std::string>());
      } catch (const ParameterError& e) {
        throw IntegrityError(kManifestName, 0, e.what());
      }
      m.grid_interior = j.at("grid_interior").get<std::size_t>();
      if (m.grid_interior < 1 || m.grid_interior > (1u << 16))
        throw IntegrityError(kManifestName, 0, "grid_interior out of range");
      m.num_samples = j.at("num_samples").get<std::size_t>();
      m.method = j.at("method").get<std::string>();
      for (const auto& [name, info] : j.at("field_files").items())
        m.field_files[name] = {info.at("filename").get<std::string>(),
                               info.at("byte_length").get<std::uint64_t>(),
                               info.at("crc32").get<std::uint32_t>()};
      m.dtype = j.at("dtype").get<std::string>();
      m.layout = j.at("layout").get<std::string>();
      const auto& g = j.at("generation");
      m.generation.master_seed = g.at("master_seed").get<std::uint64_t>();
      m.generation.solver_tol = g.at("solver_tol").get<double>();
      m.generation.n_basis = g.at("n_basis").get<std::size_t>();
      m.generation.noise_eta = g.at("noise_eta").get<double>();
      m.generation.delta = g.at("delta").get<double>();
      m.generation.field_params = g.at("field_params");
      m.generation.sign_convention = g.at("sign_convention").get<std::string>();
      m.generation.timings = g.at("timings").get<std::map<std::string, double>>();
      m.skipped_samples = j.at("skipped_samples").get<std::vector<std::size_t>>();
      if (j.contains("debug")) m.debug = j.at("debug");
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError(kManifestName, 0, std::string("malformed manifest: ") + e.what());
    }
    if (m.dtype != kDtype) throw IntegrityError(kManifestName, 0, "unsupported dtype '" + m.dtype + "'");
    if (m.layout != kLayout) throw IntegrityError(kManifestName, 0, "unsupported layout '" + m.layout + "'");
    const auto names = dataset_field_names(m.pde);
    if (m.field_files.size() != names.size())
      throw IntegrityError(kManifestName, 0, "field set does not match pde '" + std::string(to_string(m.pde)) + "'");
    for (const auto& name : names) {
      const auto it = m.field_files.find(name);
      if (it == m.field_files.end())
        throw IntegrityError(kManifestName, 0, "missing field '" + name + "' for pde " + std::string(to_string(m.pde)));
      const auto& fn = it->second.filename;
      if (fn.empty() || fn.find('/') != std::string::npos || fn.find('\\') != std::string::npos || fn == "..")
        throw IntegrityError(kManifestName, 0, "bad filename for field '" + name + "'");
      if (it->second.byte_length != m.num_samples * m.slab_bytes())
        throw IntegrityError(kManifestName, 0, "declared byte_length of '" + name + "' is not N*(n+2)^2*8");
    }
    return m;
  }
};

namespace detail {

inline void encode_le(std::span<const double> values, std::vector<std::byte>& out) {
  out.resize(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<std::byte>((bits >> (8 * b)) & 0xffu);
  }
}

inline std::vector<double> decode_le(std::span<const std::byte> bytes) {
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

}  // namespace detail

/// Streams samples into raw field files; the manifest is written last by
/// finish(), so an interrupted write never leaves a readable dataset.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path dir, PdeKind pde, Grid2D grid)
      : dir_(std::move(dir)), pde_(pde), grid_(grid), names_(dataset_field_names(pde)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create directory " + dir_.string() + ": " + ec.message());
    std::filesystem::remove(dir_ / kManifestName, ec);
    for (const auto& name : names_) {
      auto& s = streams_[name];
      s.out = std::make_unique<std::ofstream>(dir_ / (name + ".f64"), std::ios::binary | std::ios::trunc);
      if (!*s.out) throw IoError("cannot create " + (dir_ / (name + ".f64")).string());
    }
  }

  /// Appends sample `index`; indices must be strictly increasing.
  void append(std::size_t index, const SampleTriple& t) {
    if (finished_) throw SequencingError("DatasetWriter: append after finish");
    if (last_index_ && index <= *last_index_)
      throw SequencingError("DatasetWriter: sample " + std::to_string(index) + " arrived after " +
                            std::to_string(*last_index_));
    if (t.coefficients.kind() != pde_) throw DimensionError("DatasetWriter: pde family mismatch");
    const auto coeffs = t.coefficients.fields();
    std::vector<const FieldSample*> fields(coeffs.begin(), coeffs.end());
    fields.push_back(&t.forcing);
    fields.push_back(&t.solution);
    for (const FieldSample* f : fields)
      if (!(f->grid() == grid_)) throw DimensionError("DatasetWriter: sample grid mismatch");
    for (std::size_t i = 0; i < names_.size(); ++i) write_slab(names_[i], fields[i]->values());
    last_index_ = index;
    ++count_;
  }

  std::size_t count() const noexcept { return count_; }

  /// Completes the dataset; `seed` supplies method/generation metadata.
  DatasetManifest finish(DatasetManifest seed) {
    if (finished_) throw SequencingError("DatasetWriter: finish called twice");
    finished_ = true;
    seed.format_version = kFormatVersion;
    seed.pde = pde_;
    seed.grid_interior = grid_.n_interior();
    seed.num_samples = count_;
    seed.dtype = kDtype;
    seed.layout = kLayout;
    seed.field_files.clear();
    for (const auto& name : names_) {
      auto& s = streams_[name];
      s.out->flush();
      if (!*s.out) throw IoError("write failed: " + name + ".f64");
      s.out.reset();
      seed.field_files[name] = {name + ".f64", s.bytes, s.crc.value()};
    }
    detail::write_text_atomically(dir_ / kManifestName, seed.to_json().dump(2) + "\n");
    return seed;
  }

 private:
  struct Stream {
    std::unique_ptr<std::ofstream> out;
    Crc32 crc;
    std::uint64_t bytes = 0;
  };

  void write_slab(const std::string& name, std::span<const double> values) {
    auto& s = streams_[name];
    detail::encode_le(values, buf_);
    s.out->write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!*s.out) throw IoError("write failed: " + name + ".f64");
    s.crc.update(buf_);
    s.bytes += buf_.size();
  }

  std::filesystem::path dir_;
  PdeKind pde_;
  Grid2D grid_;
  std::vector<std::string> names_;
  std::map<std::string, Stream> streams_;
  std::vector<std::byte> buf_;
  std::optional<std::size_t> last_index_;
  std::size_t count_ = 0;
  bool finished_ = false;
};

/// Writes a complete in-memory sample list.
inline DatasetManifest write_dataset(const std::filesystem::path& dir, const std::vector<SampleTriple>& samples,
                                     DatasetManifest seed) {
  if (samples.empty()) throw ParameterError("write_dataset: no samples");
  DatasetWriter w(dir, samples.front().coefficients.kind(), samples.front().solution.grid());
  for (std::size_t k = 0; k < samples.size(); ++k) w.append(k, samples[k]);
  return w.finish(std::move(seed));
}

inline std::uint32_t checksum_field(const std::filesystem::path& dir, const std::string& field) {
  return crc32_file(dir / (field + ".f64"));
}

/// A validated on-disk dataset with random access to individual samples.
class Dataset {
 public:
  /// Reads manifest.json and eagerly validates every field file's length
  /// and CRC-32.
  static Dataset open(const std::filesystem::path& dir) {
    const auto mpath = dir / kManifestName;
    if (!std::filesystem::is_directory(dir)) throw IoError("no such dataset directory: " + dir.string());
    std::ifstream in(mpath, std::ios::binary);
    if (!in) throw IoError("cannot open " + mpath.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw IntegrityError(kManifestName, e.byte, std::string("manifest parse error: ") + e.what());
    }
    Dataset ds(dir, DatasetManifest::from_json(j));
    ds.validate_files();
    return ds;
  }

  const DatasetManifest& manifest() const noexcept { return m_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  Grid2D grid() const { return Grid2D(m_.grid_interior); }
  std::size_t size() const noexcept { return m_.num_samples; }

  /// Sample k of a named field; reads exactly one (n+2)^2 slab.
  FieldSample field(const std::string& name, std::size_t k) const {
    const auto it = m_.field_files.find(name);
    if (it == m_.field_files.end()) throw ParameterError("dataset has no field '" + name + "'");
    if (k >= m_.num_samples)
      throw ParameterError("sample " + std::to_string(k) + " out of range (N=" + std::to_string(m_.num_samples) + ")");
    const auto path = dir_ / it->second.filename;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::uint64_t slab = m_.slab_bytes();
    in.seekg(static_cast<std::streamoff>(k * slab));
    std::vector<std::byte> buf(slab);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(slab));
    if (static_cast<std::uint64_t>(in.gcount()) != slab)
      throw IntegrityError(it->second.filename, k * slab + static_cast<std::uint64_t>(in.gcount()),
                           "short read");
    return FieldSample(grid(), detail::decode_le(buf));
  }

  PdeCoefficients coefficients(std::size_t k) const {
    std::vector<FieldSample> fs;
    for (const auto& name : coefficient_field_names(m_.pde)) fs.push_back(field(name, k));
    return PdeCoefficients::from_fields(m_.pde, std::move(fs));
  }

  SampleTriple sample(std::size_t k) const { return {coefficients(k), field("f", k), field("u", k)}; }

 private:
  Dataset(std::filesystem::path dir, DatasetManifest m) : dir_(std::move(dir)), m_(std::move(m)) {}

  void validate_files() const {
    for (const auto& [name, info] : m_.field_files) {
      const auto path = dir_ / info.filename;
      std::error_code ec;
      const auto size = std::filesystem::file_size(path, ec);
      if (ec) throw IntegrityError(info.filename, 0, "missing field file: " + ec.message());
      if (size != info.byte_length)
        throw IntegrityError(info.filename, std::min<std::uint64_t>(size, info.byte_length),
                             "file is " + std::to_string(size) + " bytes, manifest declares " +
                                 std::to_string(info.byte_length));
      if (crc32_file(path) != info.crc32)
        throw IntegrityError(info.filename, 0, "crc32 mismatch over bytes [0, " + std::to_string(size) + ")");
    }
  }

  std::filesystem::path dir_;
  DatasetManifest m_;
};

inline Dataset read_dataset(const std::filesystem::path& dir) { return Dataset::open(dir); }

}  // namespace pdeforge

#include "intermulti/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace intermulti {

namespace {

constexpr char kMagic[4] = {'I', 'M', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& what) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DataError("unexpected end of file while reading " + what);
  return value;
}

void read_doubles(std::istream& is, std::vector<double>& out, std::size_t n,
                  const std::string& what) {
  out.resize(n);
  is.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw DataError("unexpected end of file while reading " + what);
}

}  // namespace

std::string task_name(Task task) {
  return task == Task::regression ? "regression" : "classification";
}

Task task_from_name(const std::string& name) {
  if (name == "regression") return Task::regression;
  if (name == "classification") return Task::classification;
  throw ConfigError("unknown task '" + name +
                    "' (expected regression or classification)");
}

const std::vector<double>& UtteranceSample::features(char modality) const {
  switch (modality) {
    case 't': return text;
    case 'v': return visual;
    case 'a': return acoustic;
  }
  throw ShapeError(std::string("unknown modality '") + modality + "'");
}

std::size_t UtteranceSample::length(char modality) const {
  switch (modality) {
    case 't': return len_t;
    case 'v': return len_v;
    case 'a': return len_a;
  }
  throw ShapeError(std::string("unknown modality '") + modality + "'");
}

void write_container(const std::filesystem::path& path,
                     const FeatureDataset& dataset) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");

  os.write(kMagic, 4);
  write_raw<std::uint32_t>(os, kVersion);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.size()));

  for (const UtteranceSample& s : dataset.samples) {
    if (dataset.task == Task::regression) {
      write_raw<std::uint8_t>(os, 0);
      write_raw<double>(os, s.label);
    } else {
      write_raw<std::uint8_t>(os, 1);
      write_raw<std::uint16_t>(os, s.label_class);
    }
    auto emit = [&](const std::vector<double>& feats, std::size_t len,
                    std::size_t dim) {
      write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(len));
      write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
      os.write(reinterpret_cast<const char*>(feats.data()),
               static_cast<std::streamsize>(feats.size() * sizeof(double)));
    };
    emit(s.text, s.len_t, dataset.d_t);
    emit(s.visual, s.len_v, dataset.d_v);
    emit(s.acoustic, s.len_a, dataset.d_a);
  }
  os.flush();
  if (!os) throw DataError("failed writing " + path.string());
}

FeatureDataset read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("malformed header in " + path.string() +
                    ": bad magic (expected IMFT)");
  }
  const auto version = read_raw<std::uint32_t>(is, "version");
  if (version != kVersion) {
    throw DataError("unsupported container version " + std::to_string(version) +
                    " in " + path.string());
  }
  const auto count = read_raw<std::uint32_t>(is, "sample count");

  FeatureDataset out;
  out.samples.resize(count);
  bool first = true;
  for (std::uint32_t idx = 0; idx < count; ++idx) {
    const std::string where = "sample " + std::to_string(idx) + " of " +
                              path.string();
    UtteranceSample& s = out.samples[idx];
    const auto kind = read_raw<std::uint8_t>(is, where);
    if (kind > 1) {
      throw DataError(where + ": unknown label kind " + std::to_string(kind));
    }
    const Task task = kind == 0 ? Task::regression : Task::classification;
    if (first) {
      out.task = task;
    } else if (task != out.task) {
      throw DataError(where + ": mixed label kinds in one container");
    }
    if (task == Task::regression) {
      s.label = read_raw<double>(is, where);
      if (!(s.label >= -3.0 && s.label <= 3.0)) {
        throw DataError(where + ": regression label " +
                        std::to_string(s.label) + " outside [-3, 3]");
      }
    } else {
      s.label_class = read_raw<std::uint16_t>(is, where);
    }

    auto take = [&](std::vector<double>& feats, std::size_t& len,
                    std::size_t& dim_field) {
      const auto len32 = read_raw<std::uint32_t>(is, where);
      const auto dim32 = read_raw<std::uint32_t>(is, where);
      if (len32 == 0 || dim32 == 0) {
        throw DataError(where + ": empty sequence (L=" + std::to_string(len32) +
                        ", D=" + std::to_string(dim32) + ")");
      }
      if (first) {
        dim_field = dim32;
      } else if (dim_field != dim32) {
        throw DataError(where + ": feature dim " + std::to_string(dim32) +
                        " disagrees with earlier samples (" +
                        std::to_string(dim_field) + ")");
      }
      len = len32;
      read_doubles(is, feats, std::size_t(len32) * dim32, where);
    };
    take(s.text, s.len_t, out.d_t);
    take(s.visual, s.len_v, out.d_v);
    take(s.acoustic, s.len_a, out.d_a);
    first = false;
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("file") ||
        !j.contains("split")) {
      throw DataError("manifest " + path.string() + " line " +
                      std::to_string(line_no) +
                      ": expected {\"file\": ..., \"split\": ...}");
    }
    entries.push_back({j["file"].get<std::string>(),
                       j["split"].get<std::string>()});
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  for (const ManifestEntry& e : entries) {
    nlohmann::json j{{"file", e.file}, {"split", e.split}};
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("failed writing " + path.string());
}

FeatureDataset load_dataset(const std::filesystem::path& manifest_path,
                            const std::string& split) {
  const auto entries = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();

  FeatureDataset out;
  out.split = split;
  bool found = false;
  for (const ManifestEntry& e : entries) {
    if (e.split != split) continue;
    FeatureDataset part = read_container(base / e.file);
    if (!found) {
      out.d_t = part.d_t;
      out.d_v = part.d_v;
      out.d_a = part.d_a;
      out.task = part.task;
      found = true;
    } else {
      if (part.d_t != out.d_t || part.d_v != out.d_v || part.d_a != out.d_a) {
        throw DataError("split '" + split + "': container " + e.file +
                        " dims disagree with earlier containers");
      }
      if (part.task != out.task) {
        throw DataError("split '" + split + "': container " + e.file +
                        " label kind disagrees with earlier containers");
      }
    }
    for (UtteranceSample& s : part.samples) out.samples.push_back(std::move(s));
  }
  if (!found) {
    throw DataError("manifest " + manifest_path.string() +
                    " has no entries for split '" + split + "'");
  }
  return out;
}

}  // namespace intermulti

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "intermulti/errors.hpp"

namespace intermulti {

enum class Task { regression, classification };

std::string task_name(Task task);
Task task_from_name(const std::string& name);

// One utterance: three row-major [len x dim] feature sequences plus either a
// real-valued intensity or a class id.
struct UtteranceSample {
  std::vector<double> text, visual, acoustic;
  std::size_t len_t = 0, len_v = 0, len_a = 0;
  double label = 0.0;        // regression
  std::uint16_t label_class = 0;  // classification

  const std::vector<double>& features(char modality) const;
  std::size_t length(char modality) const;
};

struct FeatureDataset {
  std::vector<UtteranceSample> samples;
  std::size_t d_t = 0, d_v = 0, d_a = 0;
  Task task = Task::regression;
  std::string split;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Binary feature container, little-endian throughout:
//   magic "IMFT" | version u32 | sample count u32
//   per sample:
//     label kind u8 (0 regression -> label f64; 1 class -> class u16)
//     per modality in (t, v, a) order: L u32 | D u32 | L*D f64 row-major
// Every sample in a container must share the per-modality dims and the
// label kind; regression labels must lie in [-3, +3].
void write_container(const std::filesystem::path& path,
                     const FeatureDataset& dataset);
FeatureDataset read_container(const std::filesystem::path& path);

// Manifest: line-delimited JSON objects {"file": ..., "split": ...}. File
// paths are resolved relative to the manifest's directory. Loading a split
// concatenates its containers in manifest order.
struct ManifestEntry {
  std::string file;
  std::string split;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

FeatureDataset load_dataset(const std::filesystem::path& manifest_path,
                            const std::string& split);

}  // namespace intermulti

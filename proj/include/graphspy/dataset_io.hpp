#pragma once

// On-disk datasets: <dir>/<tag>/{train,val,test}.jsonl.gz plus manifest.json.

#include <filesystem>
#include <string>
#include <vector>

#include "graphspy/corpus.hpp"

namespace graphspy {

class StaleDataset : public Error {
 public:
  explicit StaleDataset(const std::string& why) : Error("StaleDataset", why) {}
};

std::string encode_samples(const std::vector<SampleRecord>& samples);  // gzip JSON-lines
std::vector<SampleRecord> decode_samples(std::string_view gz);

void write_samples(const std::filesystem::path& path, const std::vector<SampleRecord>& samples);
std::vector<SampleRecord> read_samples(const std::filesystem::path& path);

// Writes `split` under root/<tag>/ and returns that directory.
std::filesystem::path write_dataset(const std::filesystem::path& root, const DatasetSplit& split);

// `dir` is a tag directory. Rejects manifests from another generator version.
DatasetSplit read_dataset(const std::filesystem::path& dir);

}  // namespace graphspy

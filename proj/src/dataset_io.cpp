#include "graphspy/dataset_io.hpp"

#include <sstream>

#include "graphspy/io.hpp"

namespace graphspy {

using json = nlohmann::ordered_json;

std::string encode_samples(const std::vector<SampleRecord>& samples) {
  std::string text;
  for (const auto& s : samples) {
    text += s.to_json().dump();
    text += '\n';
  }
  return gzip_compress(text);
}

std::vector<SampleRecord> decode_samples(std::string_view gz) {
  const std::string text = gzip_decompress(gz);
  std::vector<SampleRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(SampleRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error("FormatError", "sample line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_samples(const std::filesystem::path& path, const std::vector<SampleRecord>& samples) {
  write_file_atomic(path, encode_samples(samples));
}

std::vector<SampleRecord> read_samples(const std::filesystem::path& path) {
  return decode_samples(read_file(path));
}

std::filesystem::path write_dataset(const std::filesystem::path& root, const DatasetSplit& split) {
  const auto dir = root / split.tag;
  write_samples(dir / "train.jsonl.gz", split.train);
  write_samples(dir / "val.jsonl.gz", split.val);
  write_samples(dir / "test.jsonl.gz", split.test);
  // Manifest last: its presence marks a complete dataset.
  write_file_atomic(dir / "manifest.json", split.manifest.dump(2) + "\n");
  return dir;
}

DatasetSplit read_dataset(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error("FormatError", (dir / "manifest.json").string() + ": " + e.what());
  }
  const auto version = manifest.value("generator_version", std::string());
  if (version != generator_version())
    throw StaleDataset(dir.string() + " was built by generator '" + version + "', expected '" +
                       generator_version() + "'");
  DatasetSplit split;
  split.tag = manifest.value("tag", dir.filename().string());
  split.manifest = std::move(manifest);
  split.train = read_samples(dir / "train.jsonl.gz");
  split.val = read_samples(dir / "val.jsonl.gz");
  split.test = read_samples(dir / "test.jsonl.gz");
  return split;
}

}  // namespace graphspy

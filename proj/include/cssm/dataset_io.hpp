#pragma once

#include <string>

#include "cssm/signal_types.hpp"

namespace cssm {

// Binary dataset container, little-endian:
//   magic "CSSMDS01" (8 bytes), u32 version=1, u32 M, u32 T, u32 n_samples,
//   u32 n_classes, f64 fs, then per sample: u32 label, u32 group_id,
//   M*T IEEE-754 binary32 values row-major (electrode-major).
// Sample values are narrowed to binary32 on write.
void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

// CSV import: a JSON manifest
//   {"fs": 250.0, "n_classes": 2,
//    "samples": [{"path": "s0.csv", "label": 0, "group": 0}, ...]}
// where each referenced CSV holds one sample as M rows of T comma-separated
// values. Paths are resolved relative to the manifest location. Parsed values
// are quantized to binary32, so a CSV export of a binary dataset imports to
// identical contents.
LabeledDataset import_dataset_csv(const std::string& manifest_path);

// Writes one sample as an M x T CSV (binary32-exact text precision).
void export_sample_csv(const SignalTensor& x, const std::string& path);

}  // namespace cssm

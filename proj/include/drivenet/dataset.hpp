#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drivenet/tensor.hpp"

namespace drivenet {

struct Sample {
  Tensor image;        // 1×48×64, values in [0,1]
  int label = 0;       // 0..9
  std::string source;  // originating file or synthetic id
};

struct ManifestRecord {
  std::string path;  // relative to the manifest's directory
  int label = 0;
};

struct DatasetManifest {
  std::string root;  // directory the record paths resolve against
  std::vector<ManifestRecord> records;
};

// Binary PGM (P5) or PPM (P6) with 8-bit samples → 1×H×W grayscale in [0,1].
// Color collapses via BT.601 luma (0.299 R + 0.587 G + 0.114 B).
Tensor load_pnm(const std::string& path);

// load_pnm restricted to the camera geometry: exactly 640×480.
Tensor load_image(const std::string& path);

// Block-mean downscale by 10 in both axes (e.g. 1×480×640 → 1×48×64).
Tensor downscale10(const Tensor& image);

// Quantizes [0,1] floats to 8-bit and writes a binary P5 file.
void write_pgm(const std::string& path, const Tensor& image);

// CSV with header `path,label`, labels spelled c0..c9, paths unique.
DatasetManifest load_manifest(const std::string& csv_path);
void write_manifest(const std::string& csv_path,
                    const std::vector<ManifestRecord>& records);

// One manifest record → Sample: camera-sized files (640×480) are downscaled,
// already-downscaled files (64×48) pass through.
Sample load_sample(const DatasetManifest& manifest, size_t index);

// All records, loaded in parallel, order preserved.
std::vector<Sample> load_dataset(const DatasetManifest& manifest);

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per sample

  std::vector<int64_t> test_indices(int fold) const;
  std::vector<int64_t> train_indices(int fold) const;
};

// Seeded shuffle, then contiguous split; fold sizes differ by at most one and
// every sample lands in exactly one test fold.
FoldPlan kfold_split(int64_t n, int k, uint64_t seed);

// Ten trivially separable classes: class c is a bright rectangle at grid cell
// (c/5, c%5) on a dark 48×64 canvas, plus Gaussian noise clipped to [0,1].
std::vector<Sample> synth_dataset(int n_per_class, float noise_sigma, uint64_t seed);

// Same images written as PGM files plus a manifest.csv, so downstream tools
// cannot tell synthetic data from converted camera data.
void write_synth_dataset(const std::string& dir, int n_per_class, float noise_sigma,
                         uint64_t seed);

}  // namespace drivenet

#include "drivenet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <utility>

#include "drivenet/error.hpp"
#include "drivenet/rng.hpp"

namespace drivenet {

namespace {

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(f),
                             std::istreambuf_iterator<char>()};
  if (f.bad()) throw IoError("read failed on " + path);
  return bytes;
}

// Header scanner for the PNM text preamble ('#' starts a comment to EOL).
struct PnmCursor {
  const std::vector<uint8_t>& bytes;
  size_t at = 0;
  const std::string& path;

  void skip_space_and_comments() {
    while (at < bytes.size()) {
      const uint8_t c = bytes[at];
      if (c == '#') {
        while (at < bytes.size() && bytes[at] != '\n') ++at;
      } else if (std::isspace(c)) {
        ++at;
      } else {
        break;
      }
    }
  }

  int read_number() {
    skip_space_and_comments();
    if (at >= bytes.size()) throw TruncatedError(path + ": header ends mid-field");
    if (!std::isdigit(bytes[at]))
      throw FormatError(path + ": expected a number in PNM header");
    long v = 0;
    while (at < bytes.size() && std::isdigit(bytes[at])) {
      v = v * 10 + (bytes[at] - '0');
      if (v > 1 << 30) throw FormatError(path + ": absurd PNM header value");
      ++at;
    }
    return static_cast<int>(v);
  }
};

}  // namespace

Tensor load_pnm(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError(path + ": not a binary PGM (P5) or PPM (P6) file");
  const bool color = bytes[1] == '6';

  PnmCursor cur{bytes, 2, path};
  const int w = cur.read_number();
  const int h = cur.read_number();
  const int maxval = cur.read_number();
  if (w <= 0 || h <= 0) throw FormatError(path + ": non-positive image dimensions");
  if (maxval != 255)
    throw FormatError(path + ": only 8-bit images supported, maxval=" +
                      std::to_string(maxval));
  // exactly one whitespace byte separates the header from the raster
  if (cur.at >= bytes.size() || !std::isspace(bytes[cur.at]))
    throw FormatError(path + ": missing raster separator");
  ++cur.at;

  const size_t need = static_cast<size_t>(w) * static_cast<size_t>(h) * (color ? 3 : 1);
  if (bytes.size() - cur.at < need)
    throw TruncatedError(path + ": raster needs " + std::to_string(need) +
                         " bytes, file has " + std::to_string(bytes.size() - cur.at));

  Tensor out({1, h, w});
  const uint8_t* px = bytes.data() + cur.at;
  const float inv = 1.0f / 255.0f;
  for (int64_t i = 0; i < static_cast<int64_t>(w) * h; ++i) {
    if (color) {
      const float r = static_cast<float>(px[3 * i]);
      const float g = static_cast<float>(px[3 * i + 1]);
      const float b = static_cast<float>(px[3 * i + 2]);
      out[i] = (0.299f * r + 0.587f * g + 0.114f * b) * inv;
    } else {
      out[i] = static_cast<float>(px[i]) * inv;
    }
  }
  return out;
}

Tensor load_image(const std::string& path) {
  Tensor t = load_pnm(path);
  if (t.dim(1) != 480 || t.dim(2) != 640)
    throw ShapeError(path + ": expected 640×480, got " + std::to_string(t.dim(2)) + "×" +
                     std::to_string(t.dim(1)));
  return t;
}

Tensor downscale10(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 1)
    throw ShapeError("downscale10: image must be 1×H×W, got " + image.shape_str());
  const int h = image.dim(1), w = image.dim(2);
  if (h % 10 != 0 || w % 10 != 0)
    throw ShapeError("downscale10: dimensions must divide by 10, got " + image.shape_str());

  const int oh = h / 10, ow = w / 10;
  Tensor out({1, oh, ow});
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double sum = 0.0;
      for (int dy = 0; dy < 10; ++dy)
        for (int dx = 0; dx < 10; ++dx)
          sum += image[static_cast<int64_t>(10 * y + dy) * w + 10 * x + dx];
      out[static_cast<int64_t>(y) * ow + x] = static_cast<float>(sum / 100.0);
    }
  return out;
}

void write_pgm(const std::string& path, const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 1)
    throw ShapeError("write_pgm: image must be 1×H×W, got " + image.shape_str());
  const int h = image.dim(1), w = image.dim(2);

  std::vector<uint8_t> raster(static_cast<size_t>(h) * w);
  for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
    const long q = std::lround(static_cast<double>(image[i]) * 255.0);
    raster[static_cast<size_t>(i)] = static_cast<uint8_t>(std::clamp(q, 0L, 255L));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot create " + path);
  f << "P5\n" << w << " " << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(raster.data()),
          static_cast<std::streamsize>(raster.size()));
  if (!f) throw IoError("write failed on " + path);
}

namespace {

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

DatasetManifest load_manifest(const std::string& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw IoError("cannot open " + csv_path);

  DatasetManifest m;
  const std::filesystem::path parent = std::filesystem::path(csv_path).parent_path();
  m.root = parent.empty() ? "." : parent.string();

  std::string line;
  if (!std::getline(f, line) || strip_cr(line) != "path,label")
    throw FormatError(csv_path + ": first line must be `path,label`");

  std::set<std::string> seen;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw FormatError(csv_path + ":" + std::to_string(lineno) + ": expected `path,label`");
    ManifestRecord rec;
    rec.path = line.substr(0, comma);
    const std::string tok = line.substr(comma + 1);
    if (tok.size() != 2 || tok[0] != 'c' || !std::isdigit(tok[1]))
      throw FormatError(csv_path + ":" + std::to_string(lineno) + ": label `" + tok +
                        "` is not c0..c9");
    rec.label = tok[1] - '0';
    if (!seen.insert(rec.path).second)
      throw FormatError(csv_path + ":" + std::to_string(lineno) + ": duplicate path `" +
                        rec.path + "`");
    m.records.push_back(std::move(rec));
  }
  return m;
}

void write_manifest(const std::string& csv_path, const std::vector<ManifestRecord>& records) {
  std::ofstream f(csv_path);
  if (!f) throw IoError("cannot create " + csv_path);
  f << "path,label\n";
  for (const ManifestRecord& rec : records) f << rec.path << ",c" << rec.label << "\n";
  if (!f) throw IoError("write failed on " + csv_path);
}

Sample load_sample(const DatasetManifest& manifest, size_t index) {
  const ManifestRecord& rec = manifest.records.at(index);
  const std::string full = (std::filesystem::path(manifest.root) / rec.path).string();
  Tensor t = load_pnm(full);
  if (t.dim(1) == 480 && t.dim(2) == 640) {
    t = downscale10(t);
  } else if (t.dim(1) != 48 || t.dim(2) != 64) {
    throw ShapeError(full + ": images must be 640×480 (camera) or 64×48 (downscaled), got " +
                     std::to_string(t.dim(2)) + "×" + std::to_string(t.dim(1)));
  }
  return Sample{std::move(t), rec.label, rec.path};
}

std::vector<Sample> load_dataset(const DatasetManifest& manifest) {
  const int64_t n = static_cast<int64_t>(manifest.records.size());
  std::vector<Sample> samples(static_cast<size_t>(n));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    try {
      samples[static_cast<size_t>(i)] = load_sample(manifest, static_cast<size_t>(i));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return samples;
}

std::vector<int64_t> FoldPlan::test_indices(int fold) const {
  if (fold < 0 || fold >= k) throw ValueError("fold index out of range");
  std::vector<int64_t> out;
  for (size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(static_cast<int64_t>(i));
  return out;
}

std::vector<int64_t> FoldPlan::train_indices(int fold) const {
  if (fold < 0 || fold >= k) throw ValueError("fold index out of range");
  std::vector<int64_t> out;
  for (size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(static_cast<int64_t>(i));
  return out;
}

FoldPlan kfold_split(int64_t n, int k, uint64_t seed) {
  if (k < 2) throw ValueError("kfold_split: k must be at least 2");
  if (n < k)
    throw ValueError("kfold_split: k=" + std::to_string(k) + " exceeds n=" +
                     std::to_string(n));

  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(static_cast<size_t>(n), -1);
  // the first n%k folds absorb the remainder, so sizes differ by at most 1
  int64_t at = 0;
  for (int f = 0; f < k; ++f) {
    const int64_t size = n / k + (f < n % k ? 1 : 0);
    for (int64_t i = 0; i < size; ++i, ++at)
      plan.assignments[static_cast<size_t>(order[static_cast<size_t>(at)])] = f;
  }
  return plan;
}

std::vector<Sample> synth_dataset(int n_per_class, float noise_sigma, uint64_t seed) {
  if (n_per_class < 1) throw ValueError("synth_dataset: n_per_class must be >= 1");
  if (!(noise_sigma >= 0.0f)) throw ValueError("synth_dataset: noise_sigma must be >= 0");

  constexpr int kH = 48, kW = 64;
  constexpr float kBackground = 0.08f, kForeground = 0.9f;

  Rng rng(seed);
  std::vector<Sample> samples;
  samples.reserve(static_cast<size_t>(n_per_class) * 10);
  for (int c = 0; c < 10; ++c) {
    // Classes are stripe textures: orientation alternates with c, the stripe
    // period steps every two classes. Texture (not position) is what survives
    // the feature extractor's global max pooling, so each class stays
    // separable after the network collapses spatial layout.
    const bool vertical = c % 2 == 0;
    const int period = 2 + c / 2;
    for (int i = 0; i < n_per_class; ++i) {
      Tensor img({1, kH, kW});
      img.fill(kBackground);
      for (int y = 0; y < kH; ++y)
        for (int x = 0; x < kW; ++x)
          if ((vertical ? x : y) % period == 0)
            img[static_cast<int64_t>(y) * kW + x] = kForeground;
      if (noise_sigma > 0.0f) {
        for (int64_t p = 0; p < img.numel(); ++p)
          img[p] = std::clamp(
              img[p] + noise_sigma * static_cast<float>(rng.normal()), 0.0f, 1.0f);
      }
      char id[32];
      std::snprintf(id, sizeof(id), "synth_c%d_%03d", c, i);
      samples.push_back(Sample{std::move(img), c, id});
    }
  }
  return samples;
}

void write_synth_dataset(const std::string& dir, int n_per_class, float noise_sigma,
                         uint64_t seed) {
  const std::vector<Sample> samples = synth_dataset(n_per_class, noise_sigma, seed);

  std::error_code ec;
  std::filesystem::create_directories(std::filesystem::path(dir) / "images", ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  std::vector<ManifestRecord> records;
  records.reserve(samples.size());
  for (const Sample& s : samples) {
    const std::string rel = "images/" + s.source + ".pgm";
    write_pgm((std::filesystem::path(dir) / rel).string(), s.image);
    records.push_back(ManifestRecord{rel, s.label});
  }
  write_manifest((std::filesystem::path(dir) / "manifest.csv").string(), records);
}

}  // namespace drivenet

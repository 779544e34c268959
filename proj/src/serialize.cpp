// DRVN model container: magic, format version, then tagged sections
// (META json, CNN tensors, FRST trees). Layout notes live in
// docs/model_format.md; everything below is little-endian regardless of host.
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

#include "drivenet/cascade.hpp"
#include "drivenet/error.hpp"
#include "json.hpp"

namespace drivenet {

namespace {

constexpr uint32_t kFormatVersion = 1;

uint32_t fourcc(const char tag[5]) {
  return static_cast<uint32_t>(static_cast<uint8_t>(tag[0])) |
         static_cast<uint32_t>(static_cast<uint8_t>(tag[1])) << 8 |
         static_cast<uint32_t>(static_cast<uint8_t>(tag[2])) << 16 |
         static_cast<uint32_t>(static_cast<uint8_t>(tag[3])) << 24;
}

const uint32_t kTagMeta = fourcc("META");
const uint32_t kTagCnn = fourcc("CNN ");
const uint32_t kTagForest = fourcc("FRST");

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_i32(std::vector<uint8_t>& out, int32_t v) { put_u32(out, static_cast<uint32_t>(v)); }

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t at = 0;

  void need(size_t n) const {
    if (bytes.size() - at < n)
      throw TruncatedError("model file ends " + std::to_string(n - (bytes.size() - at)) +
                           " bytes early (offset " + std::to_string(at) + ")");
  }
  uint8_t u8() {
    need(1);
    return bytes[at++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes[at] | bytes[at + 1] << 8);
    at += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[at + i]) << (8 * i);
    at += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[at + i]) << (8 * i);
    at += 8;
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + at), n);
    at += n;
    return s;
  }
  bool done() const { return at == bytes.size(); }
};

std::vector<uint8_t> encode_meta(const DriveNetModel& m) {
  nlohmann::json j;
  j["arch"] = {{"in_h", m.cnn.arch.in_h},
               {"in_w", m.cnn.arch.in_w},
               {"conv1_out", m.cnn.arch.conv1_out},
               {"conv1_k", m.cnn.arch.conv1_k},
               {"conv2_out", m.cnn.arch.conv2_out},
               {"conv2_k", m.cnn.arch.conv2_k},
               {"feature_width", m.cnn.arch.feature_width},
               {"n_classes", m.cnn.arch.n_classes}};
  j["dropout_rate"] = m.cnn.dropout_rate;
  j["cnn_seed"] = m.cnn.rng_seed;
  j["master_seed"] = m.master_seed;
  j["forest_on_logits"] = m.forest_on_logits;
  j["meta"] = m.meta;
  const std::string s = j.dump();
  return std::vector<uint8_t>(s.begin(), s.end());
}

void decode_meta(const std::vector<uint8_t>& payload, DriveNetModel& m) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(payload.begin(), payload.end());
    const nlohmann::json& a = j.at("arch");
    m.cnn.arch.in_h = a.at("in_h").get<int>();
    m.cnn.arch.in_w = a.at("in_w").get<int>();
    m.cnn.arch.conv1_out = a.at("conv1_out").get<int>();
    m.cnn.arch.conv1_k = a.at("conv1_k").get<int>();
    m.cnn.arch.conv2_out = a.at("conv2_out").get<int>();
    m.cnn.arch.conv2_k = a.at("conv2_k").get<int>();
    m.cnn.arch.feature_width = a.at("feature_width").get<int>();
    m.cnn.arch.n_classes = a.at("n_classes").get<int>();
    m.cnn.dropout_rate = j.at("dropout_rate").get<float>();
    m.cnn.rng_seed = j.at("cnn_seed").get<uint64_t>();
    m.master_seed = j.at("master_seed").get<uint64_t>();
    m.forest_on_logits = j.at("forest_on_logits").get<bool>();
    m.meta = j.at("meta").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad META section: ") + e.what());
  }
  try {
    m.cnn.arch.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("bad META section: ") + e.what());
  }
}

std::vector<uint8_t> encode_cnn(const DriveNetModel& m) {
  std::vector<uint8_t> out;
  const auto params = named_params(m.cnn);
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    const std::string n = name;
    put_u8(out, static_cast<uint8_t>(n.size()));
    out.insert(out.end(), n.begin(), n.end());
    put_u8(out, static_cast<uint8_t>(t->ndim()));
    for (int d = 0; d < t->ndim(); ++d) put_i32(out, t->dim(d));
    for (int64_t i = 0; i < t->numel(); ++i) put_f32(out, (*t)[i]);
  }
  return out;
}

void decode_cnn(const std::vector<uint8_t>& payload, DriveNetModel& m) {
  Reader r{payload};
  const uint32_t count = r.u32();
  auto params = named_params(m.cnn);
  if (count != params.size())
    throw FormatError("CNN section holds " + std::to_string(count) + " tensors, expected " +
                      std::to_string(params.size()));
  for (auto& [name, t] : params) {
    const std::string got = r.str(r.u8());
    if (got != name)
      throw FormatError("CNN section tensor `" + got + "` where `" + name + "` expected");
    const int ndim = r.u8();
    std::vector<int> shape(static_cast<size_t>(ndim));
    for (int d = 0; d < ndim; ++d) shape[static_cast<size_t>(d)] = r.i32();
    Tensor loaded;
    try {
      loaded = Tensor(shape);
    } catch (const Error& e) {
      throw FormatError(std::string("CNN section: ") + e.what());
    }
    for (int64_t i = 0; i < loaded.numel(); ++i) loaded[i] = r.f32();
    *t = std::move(loaded);
  }
  if (!r.done()) throw FormatError("CNN section has trailing bytes");
}

std::vector<uint8_t> encode_forest(const RandomForest& f) {
  std::vector<uint8_t> out;
  put_u32(out, static_cast<uint32_t>(f.feature_dim));
  put_u32(out, static_cast<uint32_t>(f.n_classes));
  put_u64(out, f.seed);
  put_u32(out, static_cast<uint32_t>(f.trees.size()));
  for (const Tree& tree : f.trees) {
    put_u64(out, tree.nodes.size());
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf()) {
        put_u8(out, 0);
        for (float p : node.posterior) put_f32(out, p);
      } else {
        put_u8(out, 1);
        put_i32(out, node.left);
        put_i32(out, node.right);
        put_u16(out, static_cast<uint16_t>(node.test.feature_indices.size()));
        for (int idx : node.test.feature_indices) put_i32(out, idx);
        for (float w : node.test.weights) put_f32(out, w);
        put_f32(out, node.test.threshold);
      }
    }
  }
  return out;
}

void decode_forest(const std::vector<uint8_t>& payload, RandomForest& f) {
  Reader r{payload};
  f.feature_dim = static_cast<int>(r.u32());
  f.n_classes = static_cast<int>(r.u32());
  f.seed = r.u64();
  if (f.feature_dim <= 0 || f.n_classes <= 0)
    throw FormatError("FRST section: non-positive dimensions");
  const uint32_t n_trees = r.u32();
  f.trees.assign(n_trees, Tree{});
  for (uint32_t t = 0; t < n_trees; ++t) {
    const uint64_t n_nodes = r.u64();
    Tree& tree = f.trees[t];
    tree.nodes.reserve(n_nodes);
    for (uint64_t i = 0; i < n_nodes; ++i) {
      TreeNode node;
      const uint8_t kind = r.u8();
      if (kind == 0) {
        node.posterior.resize(static_cast<size_t>(f.n_classes));
        for (int c = 0; c < f.n_classes; ++c) node.posterior[static_cast<size_t>(c)] = r.f32();
      } else if (kind == 1) {
        node.left = r.i32();
        node.right = r.i32();
        const uint16_t k = r.u16();
        if (k == 0) throw FormatError("FRST section: decision node with no features");
        node.test.feature_indices.resize(k);
        node.test.weights.resize(k);
        for (uint16_t j = 0; j < k; ++j) node.test.feature_indices[j] = r.i32();
        for (uint16_t j = 0; j < k; ++j) node.test.weights[j] = r.f32();
        node.test.threshold = r.f32();
        if (node.left < 0 || node.right < 0 ||
            static_cast<uint64_t>(node.left) >= n_nodes ||
            static_cast<uint64_t>(node.right) >= n_nodes)
          throw FormatError("FRST section: child index out of range");
      } else {
        throw FormatError("FRST section: unknown node kind " + std::to_string(kind));
      }
      tree.nodes.push_back(std::move(node));
    }
  }
  if (!r.done()) throw FormatError("FRST section has trailing bytes");
}

void append_section(std::vector<uint8_t>& out, uint32_t tag,
                    const std::vector<uint8_t>& payload) {
  put_u32(out, tag);
  put_u64(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
}

}  // namespace

std::vector<uint8_t> serialize_model(const DriveNetModel& model) {
  std::vector<uint8_t> out;
  out.insert(out.end(), {'D', 'R', 'V', 'N'});
  put_u32(out, kFormatVersion);
  append_section(out, kTagMeta, encode_meta(model));
  append_section(out, kTagCnn, encode_cnn(model));
  append_section(out, kTagForest, encode_forest(model.forest));
  return out;
}

DriveNetModel deserialize_model(const std::vector<uint8_t>& bytes) {
  Reader r{bytes};
  if (r.str(4) != "DRVN") throw FormatError("not a DRVN model file (bad magic)");
  const uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw VersionError("model format version " + std::to_string(version) +
                       " unsupported (expected " + std::to_string(kFormatVersion) + ")");

  DriveNetModel m;
  bool saw_meta = false, saw_cnn = false, saw_forest = false;
  std::vector<uint8_t> cnn_payload;  // decoded after META, which carries the arch

  while (!r.done()) {
    const uint32_t tag = r.u32();
    const uint64_t len = r.u64();
    r.need(len);
    std::vector<uint8_t> payload(bytes.begin() + static_cast<int64_t>(r.at),
                                 bytes.begin() + static_cast<int64_t>(r.at + len));
    r.at += len;

    if (tag == kTagMeta) {
      decode_meta(payload, m);
      saw_meta = true;
    } else if (tag == kTagCnn) {
      cnn_payload = std::move(payload);
      saw_cnn = true;
    } else if (tag == kTagForest) {
      decode_forest(payload, m.forest);
      saw_forest = true;
    } else {
      throw FormatError("unknown section tag 0x" + std::to_string(tag));
    }
  }
  if (!saw_meta || !saw_cnn || !saw_forest)
    throw FormatError("model file is missing a required section");

  decode_cnn(cnn_payload, m);

  // cross-checks the two stages agree
  const CnnArch& a = m.cnn.arch;
  if (m.cnn.conv1_w.shape != std::vector<int>{a.conv1_out, 1, a.conv1_k, a.conv1_k} ||
      m.cnn.head_w.shape != std::vector<int>{a.n_classes, a.feature_width})
    throw FormatError("CNN tensors do not match the declared architecture");
  const int expected_dim = m.forest_on_logits ? a.n_classes : a.feature_width;
  if (m.forest.feature_dim != expected_dim)
    throw FormatError("forest expects " + std::to_string(m.forest.feature_dim) +
                      "-d inputs but the CNN provides " + std::to_string(expected_dim));
  return m;
}

void save_model(const DriveNetModel& model, const std::string& path) {
  const std::vector<uint8_t> bytes = serialize_model(model);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot create " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed on " + path);
}

DriveNetModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(f),
                             std::istreambuf_iterator<char>()};
  if (f.bad()) throw IoError("read failed on " + path);
  return deserialize_model(bytes);
}

}  // namespace drivenet

#include "ovseg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ovseg/errors.hpp"

namespace ovseg {

namespace {

constexpr double kLoadPosteriorTolerance = 1e-3;

class ByteWriter {
 public:
  void magic(const char* four) { buf_.append(four, 4); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xff));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v & 0xffff));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string name)
      : data_(data), name_(std::move(name)) {}

  void expect_magic(const char* four) {
    if (data_.size() < 4 || data_.substr(0, 4) != std::string_view(four, 4)) {
      throw format_error(name_ + ": expected magic '" + four + "'");
    }
    pos_ = 4;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t lo = u8(), hi = u8();
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint32_t u32() {
    std::uint32_t lo = u16(), hi = u16();
    return lo | (hi << 16);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t offset() const { return pos_; }
  void expect_end() {
    if (pos_ != data_.size()) {
      throw format_error(name_ + ": " + std::to_string(data_.size() - pos_) +
                         " trailing bytes after byte " + std::to_string(pos_));
    }
  }
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw format_error(name_ + ": truncated at byte " + std::to_string(pos_) + ": need " +
                         std::to_string(n) + " more bytes of " + std::to_string(data_.size()) +
                         " total");
    }
  }
  const char* raw(std::size_t n) {
    need(n);
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::string_view data_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::size_t checked_pixels(std::uint32_t w, std::uint32_t h, const std::string& name) {
  if (w == 0 || h == 0) throw format_error(name + ": zero raster dimension");
  std::uint64_t n = static_cast<std::uint64_t>(w) * h;
  if (n > (1ull << 31)) throw format_error(name + ": raster too large");
  return static_cast<std::size_t>(n);
}

}  // namespace

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("read failed on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write failed on " + path.string());
}

void save_panoptic_map(const PanopticMap& map, const std::filesystem::path& path) {
  map.validate();
  ByteWriter w;
  w.magic("OVPM");
  w.u16(1);
  w.u32(map.width);
  w.u32(map.height);
  for (std::uint32_t id : map.ids) w.u32(id);
  w.u32(static_cast<std::uint32_t>(map.segments.size()));
  for (const Segment& s : map.segments) {
    w.u32(s.id);
    w.u32(s.class_id);
  }
  write_file_bytes(path, w.bytes());
}

PanopticMap load_panoptic_map(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  r.expect_magic("OVPM");
  std::uint16_t version = r.u16();
  if (version != 1) {
    throw format_error(path.string() + ": unsupported OVPM version " + std::to_string(version));
  }
  PanopticMap map;
  map.width = r.u32();
  map.height = r.u32();
  std::size_t pixels = checked_pixels(map.width, map.height, path.string());
  map.ids.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) map.ids[i] = r.u32();
  std::uint32_t count = r.u32();
  map.segments.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Segment s;
    s.id = r.u32();
    s.class_id = r.u32();
    map.segments.push_back(s);
  }
  r.expect_end();
  map.validate();
  return map;
}

void save_rle(const RleMask& rle, const std::filesystem::path& path) {
  rle.validate();
  ByteWriter w;
  w.magic("OVRL");
  w.u32(rle.width);
  w.u32(rle.height);
  w.u32(static_cast<std::uint32_t>(rle.runs.size()));
  for (std::uint32_t run : rle.runs) w.u32(run);
  write_file_bytes(path, w.bytes());
}

RleMask load_rle(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  r.expect_magic("OVRL");
  RleMask rle;
  rle.width = r.u32();
  rle.height = r.u32();
  std::uint32_t count = r.u32();
  rle.runs.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) rle.runs[i] = r.u32();
  r.expect_end();
  rle.validate();
  return rle;
}

void save_feature_grid(const DenseFeatureGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  ByteWriter w;
  w.magic("OVFT");
  w.u16(1);
  w.u32(grid.fh);
  w.u32(grid.fw);
  w.u32(grid.dim);
  for (float v : grid.values) w.f32(v);
  write_file_bytes(path, w.bytes());
}

DenseFeatureGrid load_feature_grid(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  r.expect_magic("OVFT");
  std::uint16_t version = r.u16();
  if (version != 1) {
    throw format_error(path.string() + ": unsupported OVFT version " + std::to_string(version));
  }
  DenseFeatureGrid grid;
  grid.fh = r.u32();
  grid.fw = r.u32();
  grid.dim = r.u32();
  if (grid.fh == 0 || grid.fw == 0 || grid.dim == 0) {
    throw format_error(path.string() + ": zero feature dimension");
  }
  std::uint64_t n = static_cast<std::uint64_t>(grid.fh) * grid.fw * grid.dim;
  if (n > (1ull << 31)) throw format_error(path.string() + ": feature grid too large");
  grid.values.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < grid.values.size(); ++i) grid.values[i] = r.f32();
  r.expect_end();
  grid.validate();
  return grid;
}

void save_text_embeddings(const TextEmbeddings& texts, const std::filesystem::path& path) {
  texts.validate();
  ByteWriter w;
  w.magic("OVTE");
  w.u32(texts.num_classes);
  w.u32(texts.dim);
  for (float v : texts.values) w.f32(v);
  write_file_bytes(path, w.bytes());
}

TextEmbeddings load_text_embeddings(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  r.expect_magic("OVTE");
  TextEmbeddings texts;
  texts.num_classes = r.u32();
  texts.dim = r.u32();
  if (texts.num_classes == 0 || texts.dim == 0) {
    throw format_error(path.string() + ": zero embedding dimension");
  }
  std::uint64_t n = static_cast<std::uint64_t>(texts.num_classes) * texts.dim;
  if (n > (1ull << 31)) throw format_error(path.string() + ": embedding matrix too large");
  texts.values.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < texts.values.size(); ++i) texts.values[i] = r.f32();
  r.expect_end();
  texts.validate();
  return texts;
}

void save_candidates(const CandidateSet& cands, const std::filesystem::path& path) {
  cands.validate();
  ByteWriter w;
  w.magic("OVCD");
  w.u32(static_cast<std::uint32_t>(cands.size()));
  w.u32(static_cast<std::uint32_t>(cands.num_classes));
  w.u32(cands.width);
  w.u32(cands.height);
  w.u32(cands.clip_posteriors ? 1u : 0u);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (float v : cands.sigmas[i].values) {
      w.u8(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
    for (float v : cands.posteriors[i]) w.f32(v);
    if (cands.clip_posteriors) {
      for (float v : (*cands.clip_posteriors)[i]) w.f32(v);
    }
  }
  write_file_bytes(path, w.bytes());
}

CandidateSet load_candidates(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  r.expect_magic("OVCD");
  CandidateSet cands;
  std::uint32_t n = r.u32();
  std::uint32_t c = r.u32();
  cands.num_classes = c;
  cands.width = r.u32();
  cands.height = r.u32();
  std::uint32_t flags = r.u32();
  bool has_clip = (flags & 1u) != 0;
  if (flags & ~1u) {
    throw format_error(path.string() + ": unknown OVCD flags " + std::to_string(flags));
  }
  if (c == 0) throw format_error(path.string() + ": zero class count");
  std::size_t pixels = checked_pixels(cands.width, cands.height, path.string());

  cands.has_no_object = true;
  if (has_clip) cands.clip_posteriors.emplace();
  for (std::uint32_t i = 0; i < n; ++i) {
    SoftMask sigma{cands.width, cands.height, std::vector<float>(pixels)};
    const char* raw = r.raw(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      sigma.values[p] = static_cast<float>(static_cast<std::uint8_t>(raw[p])) / 255.0f;
    }
    cands.sigmas.push_back(std::move(sigma));

    std::size_t posterior_offset = r.offset();
    std::vector<float> posterior(c + 1);
    double sum = 0.0;
    for (float& v : posterior) {
      v = r.f32();
      sum += v;
    }
    if (std::abs(sum - 1.0) > kLoadPosteriorTolerance) {
      throw format_error(path.string() + ": candidate " + std::to_string(i) +
                         " posterior at byte " + std::to_string(posterior_offset) +
                         " sums to " + std::to_string(sum));
    }
    cands.posteriors.push_back(std::move(posterior));

    if (has_clip) {
      std::size_t clip_offset = r.offset();
      std::vector<float> clip(c);
      double clip_sum = 0.0;
      for (float& v : clip) {
        v = r.f32();
        clip_sum += v;
      }
      if (std::abs(clip_sum - 1.0) > kLoadPosteriorTolerance) {
        throw format_error(path.string() + ": candidate " + std::to_string(i) +
                           " clip posterior at byte " + std::to_string(clip_offset) +
                           " sums to " + std::to_string(clip_sum));
      }
      cands.clip_posteriors->push_back(std::move(clip));
    }
  }
  r.expect_end();
  cands.validate();
  return cands;
}

Taxonomy taxonomy_from_json(const nlohmann::json& j) {
  const nlohmann::json* classes = &j;
  const nlohmann::json* seen = nullptr;
  if (j.is_object()) {
    if (!j.contains("classes")) {
      throw format_error("taxonomy: object form requires a 'classes' array");
    }
    classes = &j.at("classes");
    if (j.contains("seen")) seen = &j.at("seen");
  }
  if (!classes->is_array()) throw format_error("taxonomy: expected an array of classes");

  Taxonomy taxonomy;
  for (const nlohmann::json& entry : *classes) {
    TaxonomyClass cls;
    if (!entry.contains("name")) throw format_error("taxonomy: class entry without 'name'");
    cls.name = entry.at("name").get<std::string>();
    if (entry.contains("synonyms")) {
      for (const nlohmann::json& s : entry.at("synonyms")) {
        cls.synonyms.push_back(s.get<std::string>());
      }
    }
    cls.is_thing = entry.value("is_thing", true);
    taxonomy.classes.push_back(std::move(cls));
  }
  if (seen != nullptr) {
    std::vector<std::uint8_t> flags(taxonomy.classes.size(), 0);
    for (const nlohmann::json& idx : *seen) {
      std::size_t i = idx.get<std::size_t>();
      if (i >= flags.size()) {
        throw format_error("taxonomy: seen index " + std::to_string(i) + " out of range");
      }
      flags[i] = 1;
    }
    taxonomy.seen = std::move(flags);
  }
  taxonomy.validate();
  return taxonomy;
}

nlohmann::json taxonomy_to_json(const Taxonomy& taxonomy) {
  taxonomy.validate();
  nlohmann::json classes = nlohmann::json::array();
  for (const TaxonomyClass& cls : taxonomy.classes) {
    classes.push_back(nlohmann::json{
        {"name", cls.name}, {"synonyms", cls.synonyms}, {"is_thing", cls.is_thing}});
  }
  if (!taxonomy.seen) return classes;
  nlohmann::json seen = nlohmann::json::array();
  for (std::size_t i = 0; i < taxonomy.seen->size(); ++i) {
    if ((*taxonomy.seen)[i]) seen.push_back(i);
  }
  return nlohmann::json{{"classes", classes}, {"seen", seen}};
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw format_error(path.string() + ": invalid JSON");
  try {
    return taxonomy_from_json(j);
  } catch (const validation_error& e) {
    throw format_error(path.string() + ": " + e.what());
  }
}

void save_taxonomy(const Taxonomy& taxonomy, const std::filesystem::path& path) {
  write_file_bytes(path, taxonomy_to_json(taxonomy).dump(2) + "\n");
}

DumpManifest load_manifest(const std::filesystem::path& dump_dir) {
  std::filesystem::path manifest_path = dump_dir / "manifest.json";
  std::string bytes = read_file_bytes(manifest_path);
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw format_error(manifest_path.string() + ": invalid JSON");

  DumpManifest manifest;
  manifest.root = dump_dir;
  if (!j.contains("taxonomy")) {
    throw format_error(manifest_path.string() + ": missing 'taxonomy'");
  }
  manifest.taxonomy_file = dump_dir / j.at("taxonomy").get<std::string>();
  manifest.resolution = j.value("resolution", nlohmann::json::object());
  if (!j.contains("images") || !j.at("images").is_array()) {
    throw format_error(manifest_path.string() + ": missing 'images' array");
  }
  for (const nlohmann::json& entry : j.at("images")) {
    DumpImage image;
    image.id = entry.at("id").get<std::string>();
    image.candidates_file = dump_dir / entry.at("candidates").get<std::string>();
    if (entry.contains("gt")) image.gt_file = dump_dir / entry.at("gt").get<std::string>();
    if (entry.contains("features")) {
      image.features_file = dump_dir / entry.at("features").get<std::string>();
    }
    manifest.images.push_back(std::move(image));
  }
  std::sort(manifest.images.begin(), manifest.images.end(),
            [](const DumpImage& a, const DumpImage& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < manifest.images.size(); ++i) {
    if (manifest.images[i].id == manifest.images[i - 1].id) {
      throw format_error(manifest_path.string() + ": duplicate image id '" +
                         manifest.images[i].id + "'");
    }
  }
  return manifest;
}

PredictionDump load_dump(const std::filesystem::path& dump_dir) {
  PredictionDump dump;
  dump.manifest = load_manifest(dump_dir);
  dump.taxonomy = load_taxonomy(dump.manifest.taxonomy_file);
  dump.candidates.reserve(dump.manifest.images.size());
  for (const DumpImage& image : dump.manifest.images) {
    try {
      dump.candidates.push_back(load_candidates(image.candidates_file));
    } catch (const format_error& e) {
      throw format_error("image '" + image.id + "': " + e.what());
    }
    if (dump.candidates.back().num_classes != dump.taxonomy.size()) {
      throw format_error("image '" + image.id + "': candidate classes (" +
                         std::to_string(dump.candidates.back().num_classes) +
                         ") do not match the taxonomy (" + std::to_string(dump.taxonomy.size()) +
                         ")");
    }
  }
  return dump;
}

void save_dump(const std::filesystem::path& dump_dir, const Taxonomy& taxonomy,
               std::span<const DumpImagePayload> images, const nlohmann::json& resolution) {
  std::error_code ec;
  std::filesystem::create_directories(dump_dir, ec);
  if (ec) throw io_error("cannot create directory " + dump_dir.string() + ": " + ec.message());

  save_taxonomy(taxonomy, dump_dir / "taxonomy.json");
  nlohmann::json entries = nlohmann::json::array();
  for (const DumpImagePayload& payload : images) {
    nlohmann::json entry{{"id", payload.id}, {"candidates", payload.id + ".ovcd"}};
    save_candidates(payload.candidates, dump_dir / (payload.id + ".ovcd"));
    if (payload.gt) {
      save_panoptic_map(*payload.gt, dump_dir / (payload.id + ".ovpm"));
      entry["gt"] = payload.id + ".ovpm";
    }
    if (payload.features) {
      save_feature_grid(*payload.features, dump_dir / (payload.id + ".ovft"));
      entry["features"] = payload.id + ".ovft";
    }
    entries.push_back(std::move(entry));
  }
  nlohmann::json manifest{{"version", 1},
                          {"taxonomy", "taxonomy.json"},
                          {"resolution", resolution},
                          {"images", entries}};
  write_file_bytes(dump_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ovseg

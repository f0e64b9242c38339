#include "ovseg/testkit/synth.hpp"

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "ovseg/errors.hpp"
#include "ovseg/io.hpp"
#include "ovseg/testkit/fixtures.hpp"
#include "ovseg/testkit/rng.hpp"
#include "ovseg/testkit/scene.hpp"

namespace ovseg::testkit {

namespace {

constexpr std::uint64_t kImageStream = 0x1000;

std::string image_id(std::uint32_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "img_%04u", index);
  return buf;
}

}  // namespace

void write_synth_dump(const SynthParams& params, std::uint64_t seed,
                      const std::filesystem::path& out_dir) {
  Taxonomy taxonomy = gen_taxonomy(params.class_count, seed);

  std::vector<std::uint32_t> class_map(params.class_count);
  for (std::uint32_t c = 0; c < params.class_count; ++c) class_map[c] = c;
  if (params.swap_feature_a >= 0 && params.swap_feature_b >= 0) {
    auto a = static_cast<std::size_t>(params.swap_feature_a);
    auto b = static_cast<std::size_t>(params.swap_feature_b);
    if (a >= class_map.size() || b >= class_map.size()) {
      throw validation_error("write_synth_dump: --swap-features class index out of range");
    }
    std::swap(class_map[a], class_map[b]);
  }
  TextEmbeddings texts = orthonormal_embeddings(params.class_count);

  SceneSpec spec;
  spec.width = params.width;
  spec.height = params.height;
  spec.min_segments = params.min_segments;
  spec.max_segments = params.max_segments;
  spec.class_count = params.class_count;
  spec.noise.erosion_radius = params.erosion_radius;
  spec.noise.dilation_radius = params.dilation_radius;
  spec.noise.class_flip_prob = params.class_flip_prob;
  spec.noise.no_object_flip_prob = params.no_object_flip_prob;
  spec.noise.spurious_candidates = params.spurious_candidates;

  std::vector<DumpImagePayload> payloads;
  payloads.reserve(params.images);
  for (std::uint32_t i = 0; i < params.images; ++i) {
    spec.seed = mix_seed(seed, kImageStream + i);
    Scene scene = gen_scene(spec, taxonomy);
    DumpImagePayload payload;
    payload.id = image_id(i);
    payload.candidates = std::move(scene.candidates);
    if (params.emit_features) {
      payload.features = class_aligned_features(scene.gt, texts, class_map);
    }
    payload.gt = std::move(scene.gt);
    payloads.push_back(std::move(payload));
  }

  nlohmann::json resolution{{"width", params.width}, {"height", params.height}};
  save_dump(out_dir, taxonomy, payloads, resolution);
  if (params.emit_features) {
    save_text_embeddings(texts, out_dir / "texts.ovte");
  }
}

}  // namespace ovseg::testkit

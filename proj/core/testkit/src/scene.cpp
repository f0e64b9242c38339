#include "ovseg/testkit/scene.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "ovseg/errors.hpp"
#include "ovseg/testkit/rng.hpp"

namespace ovseg::testkit {

namespace {

constexpr std::uint64_t kTaxonomyStream = 0x7a78;
constexpr std::uint64_t kSceneStream = 0x5c;

SoftMask soften(const BinaryMask& mask, float inside, float outside) {
  SoftMask sigma{mask.width, mask.height, std::vector<float>(mask.bits.size())};
  for (std::size_t p = 0; p < mask.bits.size(); ++p) {
    sigma.values[p] = mask.bits[p] ? inside : outside;
  }
  return sigma;
}

// Posterior over C+1 (no-object last). `conf` goes to `cls`, the rest is
// spread over the remaining entries.
std::vector<float> posterior_at(std::uint32_t cls, std::uint32_t c, double conf) {
  std::vector<float> p(c + 1, static_cast<float>((1.0 - conf) / c));
  p[cls] = static_cast<float>(conf);
  return p;
}

// Argmax on the no-object entry; the real class keeps most of the residual
// mass so the strip policy recovers it with confidence 0.9.
std::vector<float> no_object_posterior(std::uint32_t cls, std::uint32_t c) {
  std::vector<float> p(c + 1, c > 1 ? static_cast<float>(0.01 / (c - 1)) : 0.0f);
  p[c] = 0.9f;
  p[cls] = 0.09f;
  return p;
}

std::vector<float> clip_posterior_at(std::uint32_t cls, std::uint32_t c) {
  std::vector<float> p(c, c > 1 ? static_cast<float>(0.1 / (c - 1)) : 0.0f);
  p[cls] = c > 1 ? 0.9f : 1.0f;
  return p;
}

BinaryMask morph(const BinaryMask& mask, bool grow) {
  BinaryMask out = mask;
  const std::int64_t w = mask.width, h = mask.height;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      bool any = false, all = true;
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        std::int64_t nx = x + dx, ny = y + dy;
        bool v = nx >= 0 && nx < w && ny >= 0 && ny < h &&
                 mask.bits[static_cast<std::size_t>(ny) * w + nx] != 0;
        any |= v;
        all &= v;
      }
      std::size_t p = static_cast<std::size_t>(y) * w + x;
      out.bits[p] = grow ? (mask.bits[p] || any) : (mask.bits[p] && all);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, std::uint32_t radius) {
  BinaryMask out = mask;
  for (std::uint32_t i = 0; i < radius; ++i) out = morph(out, false);
  return out;
}

BinaryMask dilate(const BinaryMask& mask, std::uint32_t radius) {
  BinaryMask out = mask;
  for (std::uint32_t i = 0; i < radius; ++i) out = morph(out, true);
  return out;
}

void SceneSpec::validate() const {
  if (width == 0 || height == 0) throw validation_error("SceneSpec: zero raster dimension");
  if (min_segments == 0 || min_segments > max_segments) {
    throw validation_error("SceneSpec: segment count range is empty");
  }
  if (static_cast<std::uint64_t>(max_segments) > static_cast<std::uint64_t>(width) * height) {
    throw validation_error("SceneSpec: more segments than pixels");
  }
  if (class_count < 2 || class_count < max_segments) {
    throw validation_error("SceneSpec: class_count must be >= 2 and >= max_segments");
  }
  for (double p : {noise.class_flip_prob, noise.no_object_flip_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw validation_error("SceneSpec: probability outside [0, 1]");
  }
}

Taxonomy gen_taxonomy(std::uint32_t class_count, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kTaxonomyStream));
  Taxonomy taxonomy;
  std::vector<std::uint8_t> seen(class_count, 0);
  for (std::uint32_t c = 0; c < class_count; ++c) {
    TaxonomyClass cls;
    cls.name = "class_" + std::to_string(c);
    cls.synonyms = {cls.name};
    cls.is_thing = rng.chance(0.5);
    taxonomy.classes.push_back(std::move(cls));
    seen[c] = rng.chance(0.5) ? 1 : 0;
  }
  // An all-one or all-zero draw would degenerate the split; pin one of each.
  seen[0] = 1;
  if (class_count > 1) seen[class_count - 1] = 0;
  taxonomy.seen = std::move(seen);
  return taxonomy;
}

Scene gen_scene(const SceneSpec& spec) {
  return gen_scene(spec, gen_taxonomy(spec.class_count, spec.seed));
}

Scene gen_scene(const SceneSpec& spec, const Taxonomy& taxonomy) {
  spec.validate();
  taxonomy.validate();
  if (taxonomy.size() != spec.class_count) {
    throw validation_error("gen_scene: taxonomy size does not match spec.class_count");
  }
  Rng rng(mix_seed(spec.seed, kSceneStream));

  Scene scene;
  scene.taxonomy = taxonomy;

  const std::uint32_t k =
      spec.min_segments + rng.below(spec.max_segments - spec.min_segments + 1);

  // Distinct Voronoi sites; each cell is nonempty because it contains its
  // own site pixel.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sites;
  while (sites.size() < k) {
    std::pair<std::uint32_t, std::uint32_t> s{rng.below(spec.width), rng.below(spec.height)};
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) sites.push_back(s);
  }

  scene.gt.width = spec.width;
  scene.gt.height = spec.height;
  scene.gt.ids.resize(static_cast<std::size_t>(spec.width) * spec.height);
  for (std::uint32_t y = 0; y < spec.height; ++y) {
    for (std::uint32_t x = 0; x < spec.width; ++x) {
      std::uint64_t best = ~0ull;
      std::uint32_t winner = 0;
      for (std::uint32_t i = 0; i < k; ++i) {
        std::int64_t dx = static_cast<std::int64_t>(x) - sites[i].first;
        std::int64_t dy = static_cast<std::int64_t>(y) - sites[i].second;
        std::uint64_t d = static_cast<std::uint64_t>(dx * dx + dy * dy);
        if (d < best) {
          best = d;
          winner = i;
        }
      }
      scene.gt.ids[static_cast<std::size_t>(y) * spec.width + x] = winner + 1;
    }
  }

  // Ground-truth classes without replacement, so stuff merging cannot fold
  // two gt segments together in a noise-free round trip.
  std::vector<std::uint32_t> classes(spec.class_count);
  std::iota(classes.begin(), classes.end(), 0);
  rng.shuffle(classes);
  for (std::uint32_t i = 0; i < k; ++i) {
    scene.gt.segments.push_back(Segment{i + 1, classes[i]});
  }
  scene.gt.validate();

  const std::uint32_t c = spec.class_count;
  scene.candidates.width = spec.width;
  scene.candidates.height = spec.height;
  scene.candidates.num_classes = c;
  scene.candidates.has_no_object = true;
  scene.candidates.clip_posteriors.emplace();

  auto masks = panoptic_to_masks(scene.gt);
  for (std::uint32_t i = 0; i < k; ++i) {
    BinaryMask shape = masks[i].first;
    const NoiseModel& nm = spec.noise;
    if (nm.erosion_radius > 0 && nm.dilation_radius > 0) {
      shape = rng.chance(0.5) ? erode(shape, nm.erosion_radius)
                              : dilate(shape, nm.dilation_radius);
    } else if (nm.erosion_radius > 0) {
      shape = erode(shape, nm.erosion_radius);
    } else if (nm.dilation_radius > 0) {
      shape = dilate(shape, nm.dilation_radius);
    }
    scene.candidates.sigmas.push_back(soften(shape, 0.9f, 0.1f));

    std::uint32_t true_class = masks[i].second;
    std::uint32_t assigned = true_class;
    if (nm.class_flip_prob > 0.0 && rng.chance(nm.class_flip_prob)) {
      assigned = (true_class + 1 + rng.below(c - 1)) % c;
    }
    bool flip_no_object = nm.no_object_flip_prob > 0.0 && rng.chance(nm.no_object_flip_prob);
    scene.candidates.posteriors.push_back(flip_no_object ? no_object_posterior(assigned, c)
                                                         : posterior_at(assigned, c, 0.9));
    scene.candidates.clip_posteriors->push_back(clip_posterior_at(true_class, c));
  }

  for (std::uint32_t s = 0; s < spec.noise.spurious_candidates; ++s) {
    std::uint32_t x0 = rng.below(spec.width);
    std::uint32_t y0 = rng.below(spec.height);
    std::uint32_t rw = 1 + rng.below(spec.width - x0);
    std::uint32_t rh = 1 + rng.below(spec.height - y0);
    BinaryMask rect = BinaryMask::zeros(spec.width, spec.height);
    for (std::uint32_t y = y0; y < y0 + rh; ++y) {
      for (std::uint32_t x = x0; x < x0 + rw; ++x) {
        rect.bits[static_cast<std::size_t>(y) * spec.width + x] = 1;
      }
    }
    std::uint32_t cls = rng.below(c);
    scene.candidates.sigmas.push_back(soften(rect, 0.9f, 0.1f));
    scene.candidates.posteriors.push_back(posterior_at(cls, c, 0.85));
    scene.candidates.clip_posteriors->push_back(clip_posterior_at(cls, c));
  }

  scene.candidates.validate();
  return scene;
}

}  // namespace ovseg::testkit

#pragma once

#include <filesystem>

#include "ovseg/pipeline.hpp"

namespace ovseg::testkit {

// Writes a complete synthetic dump: manifest.json, taxonomy.json, one
// candidate record and ground-truth map per image, and (with emit_features)
// aligned feature grids plus texts.ovte. Byte-identical for equal
// (params, seed).
void write_synth_dump(const SynthParams& params, std::uint64_t seed,
                      const std::filesystem::path& out_dir);

}  // namespace ovseg::testkit

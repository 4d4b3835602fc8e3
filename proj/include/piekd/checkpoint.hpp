#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "piekd/config.hpp"
#include "piekd/ensemble.hpp"

namespace piekd::checkpoint {

// Versioned binary blob: magic + JSON header (env id, architecture, counters,
// buffer cursor metadata) followed by raw little-endian f64 blocks for every
// parameter, target, temperature, optimizer state, and return window.
// Replay contents are not stored; the buffer metadata describes the ring at
// save time.

struct BufferMeta {
  std::uint64_t capacity = 0;
  std::uint64_t size = 0;
  std::uint64_t cursor = 0;
};

struct Loaded {
  std::string env_id;
  std::vector<std::int64_t> hidden;
  int return_window = 10;
  BufferMeta buffer_meta;
  EnsembleState state;  // buffer reconstructed empty at the stored capacity
};

void save(std::ostream& os, const EnsembleState& st, const std::string& env_id,
          const std::vector<std::int64_t>& hidden, int return_window,
          const BufferMeta& meta);

// Derives the buffer metadata from the live state.
void save(const std::filesystem::path& path, const EnsembleState& st,
          const TrainerConfig& cfg);

Loaded load(std::istream& is);
Loaded load(const std::filesystem::path& path);

}  // namespace piekd::checkpoint

#pragma once

#include <filesystem>
#include <string>

#include "avgcn/params.hpp"

namespace avgcn::num {

inline constexpr int kCheckpointVersion = 1;

/// Network weights tagged with the network kind ("attention", "predictor").
struct Checkpoint {
  std::string kind;
  ParamSet params;
};

/// Plain-text dump: a header line, then per tensor a `name rows cols` line and
/// one line of values printed with round-trip precision.
std::string format_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and checks both the kind tag and the tensor layout against `expected`.
ParamSet load_checkpoint_as(const std::filesystem::path& path,
                            const std::string& kind, const ParamSet& expected);

}  // namespace avgcn::num

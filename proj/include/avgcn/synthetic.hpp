#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::synth {

inline const std::vector<std::string> kDatasetNames{"ETH", "HOTEL", "UNIV", "ZARA1",
                                                    "ZARA2"};

struct CrowdOptions {
  std::size_t frames = 120;          // retained frames (0.4 s apart)
  double spawn_probability = 0.35;   // per frame
  double area = 14.0;                // square side, meters
  double min_speed = 0.9;
  double max_speed = 1.5;
  double repulsion = 0.6;
  std::size_t max_pedestrians = 12;  // alive at once
};

/// Goal-directed walkers crossing a square area with pairwise repulsion.
/// Frame ids step by the default frame stride.
std::vector<traj::RawTrack> crowd_tracks(const CrowdOptions& options, std::uint64_t seed);

/// `frame ped x y` lines readable by the trajectory parser.
std::string format_tracks(const std::vector<traj::RawTrack>& tracks);

/// Five named datasets of about `windows_per_dataset` windows each, taken
/// evenly from a simulated crowd.
std::vector<traj::Dataset> crowd_corpus(std::size_t windows_per_dataset,
                                        std::uint64_t seed,
                                        const CrowdOptions& options = {});

/// Windows whose focal pedestrian (index 0) swerves away from exactly one
/// approaching neighbour; the other neighbours move away from it.
struct CausalWindow {
  traj::SceneWindow window;
  std::size_t causal = 0;
};

std::vector<CausalWindow> causal_windows(std::size_t count, std::uint64_t seed,
                                         std::size_t pedestrians = 4);

/// Focal-only attention examples supervised by the synthetic gaze oracle.
std::vector<attention::AttentionExample> causal_examples(
    const std::vector<CausalWindow>& windows, std::uint64_t seed);

}  // namespace avgcn::synth

#include "avgcn/trajdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "avgcn/error.hpp"

namespace avgcn::traj {

namespace {

struct Row {
  std::int64_t frame;
  std::int64_t ped;
  Vec2 position;
  std::size_t line;
};

double parse_number(std::string_view field, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line) + ": '" +
                         std::string(field) + "' is not a number",
                     line);
  }
  return value;
}

std::int64_t parse_integer(std::string_view field, std::size_t line) {
  const double v = parse_number(field, line);
  if (v != std::floor(v)) {
    throw ParseError("line " + std::to_string(line) + ": '" +
                         std::string(field) + "' is not an integer id",
                     line);
  }
  return static_cast<std::int64_t>(v);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<RawTrack> parse_dataset_text(std::string_view text,
                                         int frame_stride) {
  if (frame_stride < 1) throw ContractError("frame stride must be >= 1");
  std::vector<Row> rows;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) +
                           ": expected 4 fields (frame ped x y), got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    rows.push_back({parse_integer(fields[0], line_no),
                    parse_integer(fields[1], line_no),
                    {parse_number(fields[2], line_no),
                     parse_number(fields[3], line_no)},
                    line_no});
  }

  std::map<std::int64_t, RawTrack> by_ped;
  std::unordered_map<std::int64_t, std::size_t> last_line;
  for (const Row& r : rows) {
    RawTrack& track = by_ped[r.ped];
    track.pedestrian_id = r.ped;
    if (!track.samples.empty() && r.frame <= track.samples.back().frame) {
      throw DataError("line " + std::to_string(r.line) + ": frame " +
                      std::to_string(r.frame) + " for pedestrian " +
                      std::to_string(r.ped) + " does not follow frame " +
                      std::to_string(track.samples.back().frame) + " (line " +
                      std::to_string(last_line[r.ped]) + ")");
    }
    track.samples.push_back({r.frame, r.position});
    last_line[r.ped] = r.line;
  }
  if (rows.empty()) return {};

  std::int64_t base = rows.front().frame;
  for (const Row& r : rows) base = std::min(base, r.frame);

  std::vector<RawTrack> out;
  for (auto& [id, track] : by_ped) {
    RawTrack kept{id, {}};
    for (const TrackSample& s : track.samples)
      if ((s.frame - base) % frame_stride == 0) kept.samples.push_back(s);
    if (!kept.samples.empty()) out.push_back(std::move(kept));
  }
  return out;
}

std::vector<RawTrack> parse_dataset(const std::filesystem::path& path,
                                    int frame_stride) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read trajectory file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  try {
    return parse_dataset_text(ss.str(), frame_stride);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<Vec2> SceneWindow::positions_at(std::size_t t) const {
  std::vector<Vec2> out;
  out.reserve(pedestrians.size());
  for (const auto& p : pedestrians) out.push_back(p.abs_positions.at(t));
  return out;
}

void recompute_derived(SceneWindow& window) {
  for (PedestrianTrack& p : window.pedestrians) {
    if (p.abs_positions.size() != window.length()) {
      throw ContractError("pedestrian " + std::to_string(p.id) + " has " +
                          std::to_string(p.abs_positions.size()) +
                          " positions, window needs " +
                          std::to_string(window.length()));
    }
    p.rel_displacements.assign(p.abs_positions.size(), Vec2{});
    for (std::size_t t = 1; t < p.abs_positions.size(); ++t)
      p.rel_displacements[t] = p.abs_positions[t] - p.abs_positions[t - 1];
    const std::size_t last = window.t_obs - 1;
    p.velocity_at_obs =
        last >= 1 ? p.rel_displacements[last] / kStepSeconds : Vec2{};
  }
}

std::vector<SceneWindow> build_windows(const std::vector<RawTrack>& tracks,
                                       std::string dataset_id,
                                       std::size_t t_obs, std::size_t t_pred) {
  if (t_obs < 1 || t_pred < 1) throw ContractError("t_obs and t_pred must be >= 1");
  const std::size_t len = t_obs + t_pred;

  std::vector<std::int64_t> frames;
  for (const auto& t : tracks)
    for (const auto& s : t.samples) frames.push_back(s.frame);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  if (frames.size() < len) return {};

  std::vector<const RawTrack*> ordered;
  for (const auto& t : tracks) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RawTrack* a, const RawTrack* b) {
                     return a->pedestrian_id < b->pedestrian_id;
                   });

  std::vector<SceneWindow> windows;
  for (std::size_t start = 0; start + len <= frames.size(); ++start) {
    SceneWindow w;
    w.dataset_id = dataset_id;
    w.start_frame = frames[start];
    w.t_obs = t_obs;
    w.t_pred = t_pred;
    for (const RawTrack* track : ordered) {
      const auto& s = track->samples;
      auto it = std::lower_bound(
          s.begin(), s.end(), frames[start],
          [](const TrackSample& a, std::int64_t f) { return a.frame < f; });
      if (it == s.end() || it->frame != frames[start]) continue;
      if (static_cast<std::size_t>(s.end() - it) < len) continue;
      bool complete = true;
      for (std::size_t k = 0; k < len && complete; ++k)
        complete = it[static_cast<std::ptrdiff_t>(k)].frame == frames[start + k];
      if (!complete) continue;
      PedestrianTrack p;
      p.id = track->pedestrian_id;
      for (std::size_t k = 0; k < len; ++k)
        p.abs_positions.push_back(it[static_cast<std::ptrdiff_t>(k)].position);
      w.pedestrians.push_back(std::move(p));
    }
    if (w.pedestrians.empty()) continue;
    recompute_derived(w);
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<Vec2> relative_context(const SceneWindow& window,
                                   std::size_t focal, std::size_t t) {
  if (focal >= window.size()) throw ContractError("focal pedestrian out of range");
  const Vec2 origin = window.pedestrians[focal].abs_positions.at(t);
  std::vector<Vec2> out;
  out.reserve(window.size());
  for (const auto& p : window.pedestrians)
    out.push_back(p.abs_positions.at(t) - origin);
  return out;
}

Vec2 velocity_at(const SceneWindow& window, std::size_t pedestrian,
                 std::size_t t) {
  if (t == 0) throw ContractError("velocity_at: t must be >= 1");
  if (pedestrian >= window.size())
    throw ContractError("velocity_at: pedestrian index out of range");
  const auto& pos = window.pedestrians[pedestrian].abs_positions;
  if (t >= pos.size()) throw ContractError("velocity_at: t beyond window");
  return (pos[t] - pos[t - 1]) / kStepSeconds;
}

Dataset load_dataset(std::string name,
                     const std::vector<std::filesystem::path>& files,
                     int frame_stride) {
  Dataset ds{std::move(name), {}};
  for (const auto& f : files) {
    auto windows = build_windows(parse_dataset(f, frame_stride), ds.name);
    ds.windows.insert(ds.windows.end(),
                      std::make_move_iterator(windows.begin()),
                      std::make_move_iterator(windows.end()));
  }
  return ds;
}

Split leave_one_out_split(const std::vector<Dataset>& datasets,
                          std::string_view held_out,
                          double validation_fraction) {
  if (datasets.size() != 5) {
    throw ConfigError("leave-one-out needs exactly five datasets, got " +
                      std::to_string(datasets.size()));
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  const std::string target = upper(held_out);
  auto it = std::find_if(datasets.begin(), datasets.end(),
                         [&](const Dataset& d) { return upper(d.name) == target; });
  if (it == datasets.end()) {
    std::string known;
    for (const auto& d : datasets) known += (known.empty() ? "" : ", ") + d.name;
    throw ConfigError("unknown held-out dataset '" + std::string(held_out) +
                      "' (known: " + known + ")");
  }

  Split split;
  for (const Dataset& d : datasets) {
    if (&d == &*it) {
      split.test.insert(split.test.end(), d.windows.begin(), d.windows.end());
      continue;
    }
    const std::size_t n = d.windows.size();
    const auto n_val = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(n)));
    const auto cut = d.windows.begin() + static_cast<std::ptrdiff_t>(n - n_val);
    split.train.insert(split.train.end(), d.windows.begin(), cut);
    split.validation.insert(split.validation.end(), cut, d.windows.end());
  }
  return split;
}

}  // namespace avgcn::traj

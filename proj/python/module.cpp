#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "avgcn/attention_net.hpp"
#include "avgcn/checkpoint.hpp"
#include "avgcn/commands.hpp"
#include "avgcn/error.hpp"
#include "avgcn/eval.hpp"
#include "avgcn/gaze.hpp"
#include "avgcn/predictor.hpp"
#include "avgcn/synthetic.hpp"
#include "avgcn/visual_field.hpp"

namespace py = pybind11;
using namespace avgcn;

namespace {

using Point = std::pair<double, double>;

std::vector<Vec2> to_vec2(const std::vector<Point>& ps) {
  std::vector<Vec2> out;
  out.reserve(ps.size());
  for (const auto& [x, y] : ps) out.push_back({x, y});
  return out;
}

std::vector<Point> to_points(const std::vector<Vec2>& ps) {
  std::vector<Point> out;
  out.reserve(ps.size());
  for (const Vec2& p : ps) out.push_back({p.x, p.y});
  return out;
}

std::vector<std::vector<double>> to_rows(const num::Tensor& t) {
  std::vector<std::vector<double>> out(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t(r, c);
  return out;
}

predictor::ArmConfig arm_config(const std::string& arm, double field_angle) {
  auto a = predictor::arm_from_name(arm);
  a.field.field_angle_deg = field_angle;
  return a;
}

struct AttentionNet {
  attention::AttentionNetParams params;
};

struct Predictor {
  predictor::PredictorParams params;
};

const attention::AttentionNetParams* maybe(const AttentionNet* net) {
  return net ? &net->params : nullptr;
}

}  // namespace

PYBIND11_MODULE(_avgcn, m) {
  m.doc() = "AVGCN trajectory forecasting core";

  static py::exception<Error> base(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<gaze::SchemaError>(m, "SchemaError", base.ptr());

  py::class_<traj::SceneWindow>(m, "SceneWindow")
      .def_readonly("dataset_id", &traj::SceneWindow::dataset_id)
      .def_readonly("start_frame", &traj::SceneWindow::start_frame)
      .def_readonly("t_obs", &traj::SceneWindow::t_obs)
      .def_readonly("t_pred", &traj::SceneWindow::t_pred)
      .def_property_readonly("pedestrian_ids",
                             [](const traj::SceneWindow& w) {
                               std::vector<std::int64_t> ids;
                               for (const auto& p : w.pedestrians) ids.push_back(p.id);
                               return ids;
                             })
      .def_property_readonly("positions",
                             [](const traj::SceneWindow& w) {
                               std::vector<std::vector<Point>> out;
                               for (const auto& p : w.pedestrians)
                                 out.push_back(to_points(p.abs_positions));
                               return out;
                             })
      .def("__len__", &traj::SceneWindow::size);

  py::class_<traj::Dataset>(m, "Dataset")
      .def_readonly("name", &traj::Dataset::name)
      .def_readonly("windows", &traj::Dataset::windows);

  m.def(
      "parse_windows",
      [](const std::string& text, const std::string& dataset_id, int frame_stride) {
        return traj::build_windows(traj::parse_dataset_text(text, frame_stride), dataset_id);
      },
      py::arg("text"), py::arg("dataset_id"), py::arg("frame_stride") = traj::kDefaultFrameStride,
      "Sliding 8+12 windows from `frame ped x y` text.");
  m.def(
      "crowd_corpus",
      [](std::size_t windows_per_dataset, std::uint64_t seed) {
        return synth::crowd_corpus(windows_per_dataset, seed);
      },
      py::arg("windows_per_dataset"), py::arg("seed") = 0,
      "Five simulated datasets named like ETH/UCY.");

  m.def(
      "ade", [](const std::vector<Point>& p, const std::vector<Point>& t) {
        return eval::ade(to_vec2(p), to_vec2(t));
      });
  m.def(
      "fde", [](const std::vector<Point>& p, const std::vector<Point>& t) {
        return eval::fde(to_vec2(p), to_vec2(t));
      });
  m.def(
      "best_of_k",
      [](const std::vector<std::vector<Point>>& samples, const std::vector<Point>& truth) {
        std::vector<std::vector<Vec2>> s;
        for (const auto& x : samples) s.push_back(to_vec2(x));
        const auto e = eval::best_of_k(s, to_vec2(truth));
        return std::make_pair(e.ade, e.fde);
      },
      "Minimum ADE and minimum FDE over the samples, taken independently.");
  m.def("constant_velocity_baseline", [](const traj::SceneWindow& w) {
    std::vector<std::vector<Point>> out;
    const auto cv = eval::constant_velocity_baseline(w);
    for (std::size_t i = 0; i < w.size(); ++i)
      out.push_back(to_points(predictor::to_absolute(eval::last_observed_position(w, i), cv[i])));
    return out;
  }, "Absolute future positions from repeating each pedestrian's last observed step.");

  m.def(
      "visual_filter",
      [](const std::vector<double>& attention, const std::vector<Point>& rel,
         std::size_t focal, Point velocity, double field_angle, bool inclusive) {
        return vf::visual_filter(attention, to_vec2(rel), focal, {velocity.first, velocity.second},
                                 {field_angle, inclusive});
      },
      py::arg("attention"), py::arg("rel_positions"), py::arg("focal"), py::arg("velocity"),
      py::arg("field_angle") = 120.0, py::arg("inclusive") = true);
  m.def(
      "ground_truth_attention",
      [](const std::vector<Point>& gaze_points, const std::vector<Point>& positions,
         double sigma2) {
        return gaze::ground_truth_attention(to_vec2(gaze_points), to_vec2(positions), sigma2)
            .weights;
      },
      py::arg("gaze_points"), py::arg("positions"), py::arg("sigma2"));
  m.def("star_adjacency", [](std::size_t n, std::size_t focal) {
    return to_rows(attention::star_adjacency(n, focal));
  });
  m.def(
      "validate_session",
      [](const std::string& text) {
        std::vector<std::pair<std::string, std::string>> out;
        try {
          gaze::parse_session(text);
        } catch (const gaze::SchemaError& e) {
          for (const auto& f : e.errors()) out.push_back({f.field, f.message});
        }
        return out;
      },
      "Field errors of a session document; empty when valid.");

  py::class_<AttentionNet>(m, "AttentionNet")
      .def(py::init([](std::uint64_t seed) {
             num::Rng rng(seed);
             return AttentionNet{attention::AttentionNetParams::initialise(rng)};
           }),
           py::arg("seed") = 0)
      .def_static(
          "train",
          [](const std::vector<traj::SceneWindow>& windows, double beta, std::size_t epochs,
             std::size_t batch_size, double learning_rate, std::uint64_t seed) {
            attention::AttentionTrainConfig cfg;
            cfg.beta = beta;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.seed = seed;
            auto r = attention::train(attention::synthetic_examples(windows, seed), {}, cfg);
            return std::make_pair(AttentionNet{std::move(r.params)}, r.log.train_loss);
          },
          py::arg("windows"), py::arg("beta") = 0.5, py::arg("epochs") = 100,
          py::arg("batch_size") = 64, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
          "Trains on synthetic gaze; returns (net, per-epoch loss).")
      .def(
          "forward",
          [](const AttentionNet& net, const traj::SceneWindow& w, std::size_t focal) {
            const auto out = attention::forward(net.params, attention::make_input(w, focal));
            py::dict d;
            d["attention"] = out.attention;
            d["log_sigma2"] = out.log_sigma2;
            d["motion"] = out.motion.values();
            return d;
          },
          py::arg("window"), py::arg("focal"))
      .def("save",
           [](const AttentionNet& net, const std::string& path) {
             num::save_checkpoint(path, {"attention", net.params.weights});
           })
      .def_static("load", [](const std::string& path) {
        return AttentionNet{num::load_checkpoint_as(
            path, "attention", attention::AttentionNetParams::zeros().weights)};
      });

  py::class_<Predictor>(m, "Predictor")
      .def(py::init([](std::uint64_t seed) {
             num::Rng rng(seed);
             return Predictor{predictor::PredictorParams::initialise(rng)};
           }),
           py::arg("seed") = 0)
      .def_static(
          "train",
          [](const std::vector<traj::SceneWindow>& windows, const std::string& arm,
             const AttentionNet* attention, std::size_t epochs, std::size_t batch_size,
             double learning_rate, double alpha, std::uint64_t seed, std::size_t max_steps) {
            predictor::PredictorTrainConfig cfg;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.alpha = alpha;
            cfg.seed = seed;
            cfg.max_steps = max_steps;
            const auto prepared =
                predictor::prepare(windows, predictor::arm_from_name(arm), maybe(attention));
            auto r = predictor::train(prepared, cfg);
            return std::make_pair(Predictor{std::move(r.params)}, r.log.epoch_reconstruction);
          },
          py::arg("windows"), py::arg("arm") = "GCN", py::arg("attention") = nullptr,
          py::arg("epochs") = 200, py::arg("batch_size") = 64, py::arg("learning_rate") = 1e-4,
          py::arg("alpha") = 0.001, py::arg("seed") = 0, py::arg("max_steps") = 0,
          "Returns (predictor, per-epoch reconstruction error).")
      .def(
          "predict",
          [](const Predictor& p, const traj::SceneWindow& w, const std::string& arm,
             const AttentionNet* attention, std::size_t k, std::uint64_t seed,
             double field_angle) {
            const auto a = predictor::attention_matrix(w, arm_config(arm, field_angle),
                                                       maybe(attention));
            const auto set = predictor::predict(w, p.params, a, num::Rng(seed), {k, 0.0});
            std::vector<std::vector<std::vector<Point>>> out;
            for (std::size_t i = 0; i < w.size(); ++i) {
              const Vec2 origin = eval::last_observed_position(w, i);
              std::vector<std::vector<Point>> samples;
              for (const auto& s : set.pedestrians[i].samples)
                samples.push_back(to_points(predictor::to_absolute(origin, s)));
              out.push_back(std::move(samples));
            }
            return out;
          },
          py::arg("window"), py::arg("arm") = "GCN", py::arg("attention") = nullptr,
          py::arg("k") = 20, py::arg("seed") = 0, py::arg("field_angle") = 120.0,
          "Absolute positions, indexed [pedestrian][sample][step].")
      .def(
          "evaluate",
          [](const Predictor& p, const std::vector<traj::SceneWindow>& windows,
             const std::string& arm, const AttentionNet* attention, std::size_t k,
             std::uint64_t seed) {
            const auto s = eval::evaluate(windows, p.params, predictor::arm_from_name(arm),
                                          maybe(attention), k, seed);
            py::dict d;
            d["ade"] = s.model.ade;
            d["fde"] = s.model.fde;
            d["cv_ade"] = s.baseline.ade;
            d["cv_fde"] = s.baseline.fde;
            d["windows"] = s.windows;
            d["pedestrians"] = s.pedestrians;
            return d;
          },
          py::arg("windows"), py::arg("arm") = "GCN", py::arg("attention") = nullptr,
          py::arg("k") = 20, py::arg("seed") = 0)
      .def("save",
           [](const Predictor& p, const std::string& path) {
             num::save_checkpoint(path, {"predictor", p.params.weights});
           })
      .def_static("load", [](const std::string& path) {
        return Predictor{num::load_checkpoint_as(path, "predictor",
                                                 predictor::PredictorParams::zeros().weights)};
      });

  m.def("validate_report", &eval::validate_report, "Problems found in a MetricReport document.");
  m.def(
      "parse_config", [](const std::string& text) { return cli::to_json(cli::parse_config(text)); },
      "Normalised config JSON with defaults filled in; unknown keys raise ConfigError.");
  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_json) -> std::string {
        const auto cfg = cli::parse_config(config_json);
        if (command == "train-attention") return cli::cmd_train_attention(cfg).string();
        if (command == "train-predictor") return cli::cmd_train_predictor(cfg).string();
        if (command == "eval") return cli::cmd_eval(cfg).to_json();
        if (command == "predict") return cli::cmd_predict(cfg).string();
        throw ConfigError("unknown command '" + command + "'");
      },
      py::arg("command"), py::arg("config_json"),
      "Runs a pipeline command; returns the artifact path (report JSON for eval).");
  m.def(
      "synth", [](const std::string& out, std::size_t frames, std::uint64_t seed) {
        cli::cmd_synth(out, frames, seed);
      },
      py::arg("out_dir"), py::arg("frames") = 400, py::arg("seed") = 0);
}

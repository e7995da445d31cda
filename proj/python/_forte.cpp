#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "forte/eval.hpp"
#include "forte/scenario.hpp"
#include "forte/slip.hpp"

namespace py = pybind11;
using namespace forte;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Trace trace_from_arrays(const Array& t, const Array& channels, std::optional<Array> slip_gt) {
  if (channels.ndim() != 2 || channels.shape(1) != static_cast<py::ssize_t>(kNumChannels))
    throw py::value_error("channels must have shape (n, 6)");
  if (t.ndim() != 1 || t.shape(0) != channels.shape(0)) throw py::value_error("t must have shape (n,)");
  const auto n = static_cast<std::size_t>(t.shape(0));
  if (slip_gt && (slip_gt->ndim() != 1 || static_cast<std::size_t>(slip_gt->shape(0)) != n))
    throw py::value_error("slip_gt must have shape (n,)");
  Trace tr;
  tr.has_slip = slip_gt.has_value();
  tr.rows.resize(n);
  auto tv = t.unchecked<1>();
  auto cv = channels.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = tr.rows[i];
    r.frame.t = tv(static_cast<py::ssize_t>(i));
    for (std::size_t c = 0; c < kNumChannels; ++c) r.frame.channels[c] = cv(static_cast<py::ssize_t>(i), c);
    if (slip_gt) r.slip_gt = slip_gt->at(static_cast<py::ssize_t>(i)) != 0.0 ? 1 : 0;
  }
  return tr;
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict trace_to_dict(const Trace& tr) {
  const auto n = static_cast<py::ssize_t>(tr.rows.size());
  Array t(n), ch({n, static_cast<py::ssize_t>(kNumChannels)});
  auto tv = t.mutable_unchecked<1>();
  auto cv = ch.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& r = tr.rows[static_cast<std::size_t>(i)];
    tv(i) = r.frame.t;
    for (std::size_t c = 0; c < kNumChannels; ++c) cv(i, static_cast<py::ssize_t>(c)) = r.frame.channels[c];
  }
  py::dict d;
  d["t"] = t;
  d["channels"] = ch;
  if (tr.has_force) {
    Array f(n);
    for (py::ssize_t i = 0; i < n; ++i) f.mutable_at(i) = tr.rows[static_cast<std::size_t>(i)].force_n.value_or(NAN);
    d["force_n"] = f;
  }
  if (tr.has_slip) {
    std::vector<int> s;
    s.reserve(tr.rows.size());
    for (const auto& r : tr.rows) s.push_back(r.slip_gt.value_or(0));
    d["slip_gt"] = to_array(s);
  }
  return d;
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

py::dict replay_to_dict(const ReplayResult& res) {
  const auto n = static_cast<py::ssize_t>(res.timeline.size());
  Array t(n), sigma({n, py::ssize_t{2}}), feat({n, static_cast<py::ssize_t>(kNumChannels)});
  std::vector<std::uint8_t> eta;
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& r = res.timeline[static_cast<std::size_t>(i)];
    t.mutable_at(i) = r.t;
    eta.push_back(r.eta);
    sigma.mutable_at(i, 0) = r.sigma_bar[0];
    sigma.mutable_at(i, 1) = r.sigma_bar[1];
    for (std::size_t c = 0; c < kNumChannels; ++c) feat.mutable_at(i, static_cast<py::ssize_t>(c)) = r.feature_db[c];
  }
  py::dict d;
  d["t"] = t;
  d["eta"] = to_array(eta).attr("astype")("bool");
  d["sigma_bar_db2"] = sigma;
  d["feature_db"] = feat;
  py::list events;
  for (const auto& e : res.events)
    events.append(py::make_tuple(e.t, finger_name(e.finger), e.sigma_bar_db2));
  d["events"] = events;
  d["report"] = res.has_ground_truth ? json_loads(res.report.to_json()) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_forte, m) {
  m.doc() = "tactile slip detection, force estimation and grasp simulation";

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("sample_rate_hz", &PipelineConfig::sample_rate_hz)
      .def_readwrite("median_window", &PipelineConfig::median_window)
      .def_readwrite("fft_window", &PipelineConfig::fft_window)
      .def_readwrite("overlap", &PipelineConfig::overlap)
      .def_readwrite("band_min_hz", &PipelineConfig::band_min_hz)
      .def_readwrite("band_max_hz", &PipelineConfig::band_max_hz)
      .def_readwrite("history_length", &PipelineConfig::history_length)
      .def_readwrite("monotonic_increment_db", &PipelineConfig::monotonic_increment_db)
      .def_readwrite("group_variance_gate_db2", &PipelineConfig::group_variance_gate_db2)
      .def_readwrite("slip_threshold_db2", &PipelineConfig::slip_threshold_db2)
      .def_readwrite("log_epsilon", &PipelineConfig::log_epsilon)
      .def_readwrite("baseline_seconds", &PipelineConfig::baseline_seconds)
      .def_readwrite("window_detrend", &PipelineConfig::window_detrend)
      .def("hop", &PipelineConfig::hop)
      .def("validate", &PipelineConfig::validate);

  m.def("normalize_raw", &normalize_raw, py::arg("raw"), py::arg("bits") = 11, py::arg("baseline") = 1024);
  m.def("hann_window", &hann_window, py::arg("n"));
  m.def(
      "compute_psd",
      [](const Array& x, const PipelineConfig& cfg) {
        return compute_psd(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), cfg);
      },
      py::arg("window"), py::arg("config") = PipelineConfig{});
  m.def(
      "psd_feature",
      [](const Array& psd, const PipelineConfig& cfg) {
        return psd_feature(std::span<const double>(psd.data(), static_cast<std::size_t>(psd.size())), cfg);
      },
      py::arg("psd"), py::arg("config") = PipelineConfig{});

  m.def(
      "read_trace", [](const std::string& path) { return trace_to_dict(read_trace_file(path)); }, py::arg("path"));

  m.def(
      "simulate",
      [](const std::string& scenario, std::uint64_t seed, std::optional<double> duration_s) {
        sim::ScenarioSpec s;
        s.name = scenario;
        s.seed = seed;
        s.duration_s = duration_s;
        sim::ScenarioResult r;
        {
          py::gil_scoped_release release;
          r = sim::run_scenario(s);
        }
        py::dict d = trace_to_dict(r.trace);
        d["outcome"] = r.outcome;
        d["object"] = r.object.name;
        d["info"] = r.info;
        return d;
      },
      py::arg("scenario"), py::arg("seed") = 0, py::arg("duration_s") = py::none());

  m.def(
      "replay",
      [](const Array& t, const Array& channels, std::optional<Array> slip_gt, const PipelineConfig& cfg) {
        const Trace tr = trace_from_arrays(t, channels, slip_gt);
        ReplayOptions opt;
        opt.config = cfg;
        ReplayResult res;
        {
          py::gil_scoped_release release;
          res = replay(tr, opt);
        }
        return replay_to_dict(res);
      },
      py::arg("t"), py::arg("channels"), py::arg("slip_gt") = py::none(), py::arg("config") = PipelineConfig{});

  m.def(
      "metrics",
      [](const std::vector<bool>& gt, const std::vector<bool>& pred) {
        if (gt.size() != pred.size()) throw py::value_error("gt and pred differ in length");
        std::vector<TrialLabel> labels(gt.size());
        for (std::size_t i = 0; i < gt.size(); ++i) labels[i] = {gt[i], pred[i]};
        return json_loads(EvalReport::from_labels(labels).to_json());
      },
      py::arg("gt"), py::arg("pred"));

  py::class_<ForceModel>(m, "ForceModel")
      .def_static("load", &ForceModel::load, py::arg("path"))
      .def_static("from_json", &ForceModel::from_json, py::arg("text"))
      .def("to_json", &ForceModel::to_json)
      .def("save", &ForceModel::save, py::arg("path"))
      .def("predict",
           [](const ForceModel& fm, const Array& x) {
             if (static_cast<std::size_t>(x.size()) != fm.dim()) throw py::value_error("feature length mismatch");
             return fm.predict(std::span<const double>(x.data(), fm.dim()));
           })
      .def_property_readonly("dim", &ForceModel::dim)
      .def_property_readonly("num_support_vectors", &ForceModel::num_support_vectors)
      .def_property_readonly("gamma", &ForceModel::gamma);

  m.def(
      "train_force",
      [](const std::string& scenario, std::size_t trials, std::uint64_t seed) {
        py::gil_scoped_release release;
        const auto data = sim::traces_to_trials(sim::generate_press_traces(scenario, trials, seed), PipelineConfig{}, 2.0);
        return train(data, SvrParams{});
      },
      py::arg("scenario") = "B", py::arg("trials") = 24, py::arg("seed") = 0);

  m.def(
      "grasp",
      [](const std::string& object, const std::string& policy, std::uint64_t seed) {
        sim::GraspSetup g;
        g.object = sim::find_object(object);
        g.seed = seed;
        g.controller.policy = parse_policy(policy);
        g.record_trace = false;
        sim::GraspResult r;
        {
          py::gil_scoped_release release;
          r = sim::run_grasp(g, sim::default_force_model());
        }
        py::dict d;
        d["outcome"] = phase_name(r.outcome);
        d["increments"] = r.increments;
        d["slip_onsets"] = r.slip_onsets;
        d["max_normal_force_n"] = r.max_normal_force_n;
        d["required_force_n"] = r.required_force_n;
        d["duration_s"] = r.duration_s;
        return d;
      },
      py::arg("object"), py::arg("policy") = "forte", py::arg("seed") = 0);

  m.def("objects", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& o : sim::object_suite()) out.emplace_back(o.name, o.category);
    return out;
  });

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
}

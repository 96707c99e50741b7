#include "ham/config.hpp"
#include "ham/dynamics.hpp"
#include "ham/energy.hpp"
#include "ham/io.hpp"
#include "ham/lagrangian.hpp"
#include "ham/memory.hpp"
#include "ham/state.hpp"
#include "ham/topology.hpp"
#include "ham/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace ham;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> out(static_cast<py::ssize_t>(t.size()));
  std::copy(t.begin(), t.end(), out.mutable_data());
  return out;
}

Tensor to_tensor(const Array& a) { return Tensor(a.data(), a.data() + a.size()); }

std::vector<Tensor> to_tensors(const std::vector<Array>& arrays) {
  std::vector<Tensor> out;
  for (const auto& a : arrays) out.push_back(to_tensor(a));
  return out;
}

py::list to_list(const std::vector<Tensor>& ts) {
  py::list out;
  for (const auto& t : ts) out.append(to_array(t));
  return out;
}

// Rows of a 2-D array, or a sequence of 1-D arrays.
std::vector<Tensor> rows_of(const py::object& obj) {
  if (py::isinstance<py::array>(obj) && obj.cast<py::array>().ndim() == 2) {
    const Array a = obj.cast<Array>();
    std::vector<Tensor> out;
    const auto n = static_cast<std::size_t>(a.shape(1));
    for (py::ssize_t r = 0; r < a.shape(0); ++r) out.emplace_back(a.data(r, 0), a.data(r, 0) + n);
    return out;
  }
  return to_tensors(obj.cast<std::vector<Array>>());
}

NetworkState state_of(const std::vector<Array>& layers, double t = 0.0) { return {to_tensors(layers), t}; }

Lagrangian::Function function_named(const std::string& name) {
  if (name == "identity") return Lagrangian::Function::Identity;
  if (name == "logcosh") return Lagrangian::Function::LogCosh;
  if (name == "relu") return Lagrangian::Function::Relu;
  throw DomainError("unknown elementwise function '" + name + "'");
}

NoiseModel noise_named(const std::string& kind, double level, std::uint64_t seed) {
  if (kind == "none") return NoiseModel::none();
  if (kind == "bitflip") return NoiseModel::bit_flip(level, seed);
  if (kind == "gaussian") return NoiseModel::gaussian(level, seed);
  if (kind == "mask") return NoiseModel::mask(level, seed);
  throw DomainError("unknown noise kind '" + kind + "'");
}

IntegratorConfig integrator(double dt, const std::string& method, bool adaptive, double eps, std::size_t max_steps,
                            bool clamp_input) {
  IntegratorConfig cfg;
  cfg.dt = dt;
  if (method == "euler") {
    cfg.method = IntegratorConfig::Method::Euler;
  } else if (method == "rk4") {
    cfg.method = IntegratorConfig::Method::RK4;
  } else {
    throw DomainError("unknown integrator '" + method + "'");
  }
  cfg.adaptive = adaptive;
  cfg.convergence_eps = eps;
  cfg.max_steps = max_steps;
  cfg.clamp_input = clamp_input;
  return cfg;
}

py::dict report_dict(const RecallReport& r) {
  py::dict d;
  d["overlap"] = r.overlap;
  d["bit_error"] = r.bit_error;
  d["converged"] = r.converged;
  d["steps"] = r.steps;
  d["energy_initial"] = r.energy_initial;
  d["energy_final"] = r.energy_final;
  d["success"] = r.success();
  return d;
}

py::dict trace_dict(const RelaxationTrace& trace) {
  std::vector<double> t, e, rate, vmax;
  for (const auto& row : trace.rows) {
    t.push_back(row.t);
    e.push_back(row.energy);
    rate.push_back(row.energy_rate);
    vmax.push_back(row.max_velocity);
  }
  py::dict d;
  d["t"] = to_array(t);
  d["energy"] = to_array(e);
  d["dE_dt"] = to_array(rate);
  d["max_velocity"] = to_array(vmax);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchical associative memory networks";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  py::class_<Shape>(m, "Shape")
      .def_static("flat", &Shape::flat, py::arg("n"))
      .def_static("map", &Shape::map, py::arg("height"), py::arg("width"), py::arg("channels"))
      .def_property_readonly("is_map", &Shape::is_map)
      .def_property_readonly("size", &Shape::size)
      .def_readonly("height", &Shape::height)
      .def_readonly("width", &Shape::width)
      .def_readonly("channels", &Shape::channels)
      .def("__eq__", [](const Shape& a, const Shape& b) { return a == b; })
      .def("__repr__", &Shape::str);

  py::class_<Lagrangian>(m, "Lagrangian")
      .def_static("quadratic", &Lagrangian::quadratic)
      .def_static("log_sum_exp", &Lagrangian::log_sum_exp, py::arg("beta"))
      .def_static("channel_log_sum_exp", &Lagrangian::channel_log_sum_exp, py::arg("beta"))
      .def_static(
          "elementwise", [](const std::string& f) { return Lagrangian::elementwise(function_named(f)); },
          py::arg("function"))
      .def_readonly("beta", &Lagrangian::beta)
      .def("__eq__", [](const Lagrangian& a, const Lagrangian& b) { return a == b; })
      .def("__repr__", &Lagrangian::str);

  m.def(
      "lagrangian_value", [](const Lagrangian& l, const Shape& s, const Array& x) { return value(l, s, to_tensor(x)); },
      py::arg("lagrangian"), py::arg("shape"), py::arg("x"));
  m.def(
      "activations",
      [](const Lagrangian& l, const Shape& s, const Array& x) { return to_array(activations(l, s, to_tensor(x))); },
      py::arg("lagrangian"), py::arg("shape"), py::arg("x"));
  m.def(
      "hessian_quadratic_form",
      [](const Lagrangian& l, const Shape& s, const Array& x, const Array& v) {
        return hessian_quadratic_form(l, s, to_tensor(x), to_tensor(v));
      },
      py::arg("lagrangian"), py::arg("shape"), py::arg("x"), py::arg("v"));
  m.def("feature_map_extent", &feature_map_extent, py::arg("extent"), py::arg("window"), py::arg("stride"));

  py::class_<LayerSpec>(m, "Layer")
      .def(py::init([](std::string name, Shape shape, Lagrangian lag, double tau) {
             return LayerSpec{std::move(name), shape, lag, tau};
           }),
           py::arg("name"), py::arg("shape"), py::arg("lagrangian"), py::arg("tau") = 1.0)
      .def_readwrite("name", &LayerSpec::name)
      .def_readwrite("shape", &LayerSpec::shape)
      .def_readwrite("lagrangian", &LayerSpec::lagrangian)
      .def_readwrite("tau", &LayerSpec::tau)
      .def("__repr__", [](const LayerSpec& l) {
        return "Layer(" + l.name + ", " + l.shape.str() + ", " + l.lagrangian.str() + ", tau=" + format_double(l.tau) +
               ")";
      });

  py::class_<Connection>(m, "Connection")
      .def_static(
          "dense",
          [](std::size_t lower, std::size_t rows, std::size_t cols, const Array& w) {
            return Connection::dense(lower, rows, cols, to_tensor(w));
          },
          py::arg("lower"), py::arg("rows"), py::arg("cols"), py::arg("weights"))
      .def_static(
          "conv",
          [](std::size_t lower, std::size_t window, std::size_t cin, std::size_t cout, std::size_t stride,
             const Array& k) { return Connection::conv(lower, window, cin, cout, stride, to_tensor(k)); },
          py::arg("lower"), py::arg("window"), py::arg("in_channels"), py::arg("out_channels"), py::arg("stride"),
          py::arg("kernel"))
      .def_static("avg_pool", &Connection::avg_pool, py::arg("lower"), py::arg("window"))
      .def_property(
          "weights", [](const Connection& c) { return to_array(c.weights); },
          [](Connection& c, const Array& w) {
            if (static_cast<std::size_t>(w.size()) != c.weights.size()) {
              throw ShapeError("expected " + std::to_string(c.weights.size()) + " weights");
            }
            c.weights = to_tensor(w);
          })
      .def("__repr__", &Connection::str);

  py::class_<NetworkSpec>(m, "Network")
      .def(py::init([](std::vector<LayerSpec> layers, std::vector<Connection> connections) {
             NetworkSpec s{std::move(layers), std::move(connections)};
             require_valid(s);
             return s;
           }),
           py::arg("layers"), py::arg("connections"))
      .def_readwrite("layers", &NetworkSpec::layers)
      .def_readwrite("connections", &NetworkSpec::connections)
      .def("validate", [](const NetworkSpec& s) { return validate(s); })
      .def(
          "forward",
          [](const NetworkSpec& s, std::size_t c, const Array& g) { return to_array(s.forward(c, to_tensor(g))); },
          py::arg("connection"), py::arg("g"))
      .def(
          "backward",
          [](const NetworkSpec& s, std::size_t c, const Array& g) { return to_array(s.backward(c, to_tensor(g))); },
          py::arg("connection"), py::arg("g"))
      .def("zero_state", [](const NetworkSpec& s) { return to_list(zero_state(s).layers); })
      .def(
          "energy", [](const NetworkSpec& s, const std::vector<Array>& x) { return global_energy(s, state_of(x)).total; },
          py::arg("state"))
      .def(
          "energy_rate", [](const NetworkSpec& s, const std::vector<Array>& x) { return energy_rate(s, state_of(x)); },
          py::arg("state"))
      .def(
          "reduced_energy",
          [](const NetworkSpec& s, const std::vector<Array>& x) { return reduced_energy_adiabatic(s, state_of(x)); },
          py::arg("state"))
      .def(
          "equilibrate_top",
          [](const NetworkSpec& s, const std::vector<Array>& x) {
            return to_list(equilibrate_top_layer(s, state_of(x)).layers);
          },
          py::arg("state"))
      .def(
          "velocity",
          [](const NetworkSpec& s, const std::vector<Array>& x) { return to_list(velocity(s, state_of(x))); },
          py::arg("state"))
      .def(
          "relax",
          [](const NetworkSpec& s, const std::vector<Array>& x, double dt, const std::string& method, bool adaptive,
             double eps, std::size_t max_steps, bool clamp_input) {
            const Relaxation r = relax(s, state_of(x), integrator(dt, method, adaptive, eps, max_steps, clamp_input));
            py::dict d;
            d["state"] = to_list(r.state.layers);
            d["converged"] = r.converged;
            d["steps"] = r.steps;
            d["trace"] = trace_dict(r.trace);
            return d;
          },
          py::arg("state"), py::arg("dt") = 0.0, py::arg("method") = "euler", py::arg("adaptive") = false,
          py::arg("convergence_eps") = 1e-8, py::arg("max_steps") = 100000, py::arg("clamp_input") = false)
      .def("save", [](const NetworkSpec& s, const std::filesystem::path& p) { save_network(p, s); }, py::arg("path"))
      .def_static("load", &load_network, py::arg("path"))
      .def("to_bytes",
           [](const NetworkSpec& s) {
             std::ostringstream os;
             write_network(os, s);
             return py::bytes(os.str());
           })
      .def_static(
          "from_bytes",
          [](const py::bytes& b) {
            std::istringstream is{std::string(b)};
            return read_network(is);
          },
          py::arg("data"))
      .def("to_config",
           [](const NetworkSpec& s) {
             std::ostringstream os;
             write_network_config(os, s);
             return os.str();
           })
      .def_static(
          "from_config",
          [](const std::string& text) {
            std::istringstream is(text);
            const ExperimentConfig cfg = parse_config(is);
            if (!cfg.network) throw ConfigError("<string>", 0, "config defines no network");
            return *cfg.network;
          },
          py::arg("text"))
      .def("__eq__", [](const NetworkSpec& a, const NetworkSpec& b) { return a == b; });

  m.def(
      "load_network_config",
      [](const std::filesystem::path& p) {
        const ExperimentConfig cfg = load_config(p);
        if (!cfg.network) throw ConfigError(p.string(), 0, "config defines no network");
        return *cfg.network;
      },
      py::arg("path"));

  m.def(
      "random_binary_patterns",
      [](std::size_t k, std::size_t n, std::uint64_t seed) { return to_list(random_binary_patterns(k, n, seed).patterns); },
      py::arg("k"), py::arg("n"), py::arg("seed"));
  m.def(
      "corrupt",
      [](const Array& p, const std::string& kind, double level, std::uint64_t seed) {
        return to_array(corrupt(to_tensor(p), noise_named(kind, level, seed)));
      },
      py::arg("pattern"), py::arg("kind"), py::arg("level"), py::arg("seed"));
  m.def(
      "store_patterns",
      [](const py::object& patterns, double beta, double tau_input, double tau_hidden) {
        PatternSet set;
        set.patterns = rows_of(patterns);
        return store_single_hidden(set, beta, {tau_input, tau_hidden}).spec;
      },
      py::arg("patterns"), py::arg("beta"), py::arg("tau_input") = 1.0, py::arg("tau_hidden") = 0.1);
  m.def(
      "retrieve",
      [](const NetworkSpec& s, const Array& cue, const std::optional<Array>& reference, double dt, double eps,
         std::size_t max_steps) {
        IntegratorConfig cfg = integrator(dt, "euler", false, eps, max_steps, false);
        const Tensor c = to_tensor(cue);
        std::optional<Tensor> ref;
        if (reference) ref = to_tensor(*reference);
        const Retrieval r = ref ? retrieve(s, c, cfg, std::span<const double>(*ref)) : retrieve(s, c, cfg);
        py::dict d = report_dict(r.report);
        d["retrieved"] = to_array(r.retrieved);
        return d;
      },
      py::arg("network"), py::arg("cue"), py::arg("reference") = py::none(), py::arg("dt") = 0.0,
      py::arg("convergence_eps") = 1e-8, py::arg("max_steps") = 100000);
  m.def(
      "capacity_sweep",
      [](std::size_t input_size, std::vector<std::size_t> k_list, std::vector<double> beta_list, std::size_t trials,
         std::uint64_t seed, const std::string& noise, double noise_level, double tau_hidden) {
        CapacityConfig cfg;
        cfg.input_size = input_size;
        cfg.k_list = std::move(k_list);
        cfg.beta_list = std::move(beta_list);
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.noise = noise_named(noise, noise_level, 0);
        cfg.store.tau_hidden = tau_hidden;
        py::list out;
        for (const auto& r : capacity_sweep(cfg)) {
          py::dict d;
          d["K"] = r.k;
          d["beta"] = r.beta;
          d["trials"] = r.trials;
          d["success_rate"] = r.success_rate;
          d["mean_steps"] = r.mean_steps;
          out.append(d);
        }
        return out;
      },
      py::arg("input_size"), py::arg("k_list"), py::arg("beta_list"), py::arg("trials") = 10, py::arg("seed") = 0,
      py::arg("noise") = "bitflip", py::arg("noise_level") = 0.1, py::arg("tau_hidden") = 0.0);
  m.def(
      "train",
      [](const NetworkSpec& s, const py::object& patterns, std::size_t unroll_steps, double dt, double learning_rate,
         std::size_t epochs, std::size_t batch_size, const std::string& noise, double noise_level,
         std::uint64_t noise_seed, bool backtracking) {
        PatternSet corpus;
        corpus.patterns = rows_of(patterns);
        TrainConfig cfg;
        cfg.unroll_steps = unroll_steps;
        cfg.dt = dt;
        cfg.learning_rate = learning_rate;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.noise = noise_named(noise, noise_level, noise_seed);
        cfg.backtracking = backtracking;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(s, corpus, cfg);
        }
        py::dict d;
        d["network"] = r.spec;
        d["loss_curve"] = to_array(r.loss_curve);
        d["diverged"] = r.diverged;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("network"), py::arg("patterns"), py::arg("unroll_steps") = 50, py::arg("dt") = 0.1,
      py::arg("learning_rate") = 0.1, py::arg("epochs") = 100, py::arg("batch_size") = 0,
      py::arg("noise") = "bitflip", py::arg("noise_level") = 0.1, py::arg("noise_seed") = 0,
      py::arg("backtracking") = false);
  m.def("assembly_demo", [] {
    const AssemblyDemo demo = build_assembly_demo();
    return py::make_tuple(demo.spec, to_list(demo.memories.patterns));
  });
}

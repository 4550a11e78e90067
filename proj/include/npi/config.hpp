#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "npi/benchmarks.hpp"
#include "npi/collocation.hpp"
#include "npi/elm_pi.hpp"
#include "npi/pinn_pi.hpp"
#include "npi/verify.hpp"

namespace npi {

/// Configuration problem; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Typed access to one JSON object that remembers which keys were read so
/// leftovers can be reported as unknown fields.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(field(key) + ": wrong type (got " + j_.at(key).dump() + ")");
    }
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(field(key) + ": missing required field");
    return get<T>(key, T{});
  }

  std::optional<ConfigReader> child(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return ConfigReader(j_.at(key), field(key));
  }

  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }
  const std::string& path() const { return path_; }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

enum class Algorithm { elm, pinn };

inline std::string to_string(Algorithm a) { return a == Algorithm::elm ? "elm" : "pinn"; }

struct SimBatch {
  int count = 10;
  std::optional<Box> x0_box;  // default: the system domain
  double T = 0.0;             // 0: 20 for lorenz, 10 otherwise
  double h = 0.01;
  double tol = 5e-2;
  bool write_trajectories = true;
};

struct RunConfig {
  std::string benchmark;
  Algorithm algorithm = Algorithm::elm;
  int width = 50;
  std::uint64_t seed = 0;
  int pi_iters = 10;
  ElmConfig elm;
  TrainConfig pinn;
  std::optional<VerificationSpec> verify;
  SimBatch simulate;
  std::string out;
  std::string net;  // serialized net for verify / simulate / export-smt

  /// Push shared fields into the algorithm sub-configs.
  void sync() {
    elm.width = width;
    elm.seed = seed;
    elm.max_iters = pi_iters;
    pinn.seed = seed;
    pinn.pi_iters = pi_iters;
  }
};

namespace detail {

inline Box read_box(ConfigReader& r, const std::string& key, int n) {
  const nlohmann::json& j = r.raw(key);
  auto bad = [&] { return ConfigError(r.field(key) + ": expected [lo, hi] or {\"lo\": [...], \"hi\": [...]}"); };
  try {
    Eigen::VectorXd lo(n), hi(n);
    if (j.is_array() && j.size() == 2 && j[0].is_number()) {
      lo.setConstant(j[0].get<double>());
      hi.setConstant(j[1].get<double>());
    } else if (j.is_object()) {
      auto l = j.at("lo").get<std::vector<double>>(), h = j.at("hi").get<std::vector<double>>();
      if (static_cast<int>(l.size()) != n || static_cast<int>(h.size()) != n) throw bad();
      lo = Eigen::Map<Eigen::VectorXd>(l.data(), n);
      hi = Eigen::Map<Eigen::VectorXd>(h.data(), n);
    } else {
      throw bad();
    }
    if (!(lo.array() <= hi.array()).all()) throw ConfigError(r.field(key) + ": lo > hi");
    return Box{lo, hi};
  } catch (const nlohmann::json::exception&) {
    throw bad();
  }
}

template <class Fn>
auto checked(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

}  // namespace detail

inline VerificationSpec parse_verification_spec(ConfigReader r) {
  VerificationSpec s;
  s.mu = r.get("mu", s.mu);
  s.epsilon = r.get("epsilon", s.epsilon);
  s.c1 = r.get("c1", s.c1);
  s.c2 = r.get("c2", s.c2);
  s.delta = r.get("delta", s.delta);
  s.max_boxes = r.get<long long>("max_boxes", s.max_boxes);
  s.mode = detail::checked(r.field("mode"), [&] { return verify_mode_from_string(r.get<std::string>("mode", "decrease_only")); });
  r.reject_unknown();
  detail::checked(r.path(), [&] {
    s.validate();
    return 0;
  });
  return s;
}

/// Parses a run document. Unknown fields and unresolvable names are
/// reported with their path, e.g. "config.benchmark: ...".
inline RunConfig parse_run_config(const nlohmann::json& j) {
  ConfigReader r(j, "config");
  RunConfig c;
  c.benchmark = r.get<std::string>("benchmark", "");
  if (c.benchmark.empty()) throw ConfigError("config.benchmark: missing required field");
  const Benchmark bm = detail::checked("config.benchmark", [&] { return make_benchmark(c.benchmark); });
  const int n = bm.system.state_dim();
  const std::string algo = r.get<std::string>("algorithm", "elm");
  if (algo == "elm") c.algorithm = Algorithm::elm;
  else if (algo == "pinn") c.algorithm = Algorithm::pinn;
  else throw ConfigError("config.algorithm: expected \"elm\" or \"pinn\", got \"" + algo + "\"");
  c.width = r.get("width", c.width);
  if (c.width < 1) throw ConfigError("config.width: must be >= 1");
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.pi_iters = r.get("pi_iters", c.pi_iters);
  if (c.pi_iters < 1) throw ConfigError("config.pi_iters: must be >= 1");
  c.out = r.get<std::string>("out", "");
  c.net = r.get<std::string>("net", "");

  if (bm.uncontrollable_linearization) {
    c.elm.activation = Activation::relu;
    c.elm.zero_bias = true;
    c.pinn.lambda_gain = 0.0;
  }
  if (auto e = r.child("elm")) {
    c.elm.activation = detail::checked(e->field("activation"), [&] {
      return activation_from_string(e->get<std::string>("activation", to_string(c.elm.activation)));
    });
    c.elm.zero_bias = e->get("zero_bias", c.elm.zero_bias);
    const std::string origin = e->get<std::string>("origin", "subtract");
    if (origin == "subtract") c.elm.origin = OriginMode::subtract;
    else if (origin == "penalty") c.elm.origin = OriginMode::penalty;
    else throw ConfigError(e->field("origin") + ": expected \"subtract\" or \"penalty\"");
    c.elm.lambda = e->get("lambda", c.elm.lambda);
    if (c.elm.lambda < 0) throw ConfigError(e->field("lambda") + ": must be >= 0");
    c.elm.tol = e->get("tol", c.elm.tol);
    c.elm.resample = e->get("resample", c.elm.resample);
    c.elm.collocation = e->get("collocation", c.elm.collocation);
    const std::string sampler = e->get<std::string>("sampler", "uniform");
    if (sampler == "uniform") c.elm.sampler = Sampler::uniform;
    else if (sampler == "grid") c.elm.sampler = Sampler::grid;
    else throw ConfigError(e->field("sampler") + ": expected \"uniform\" or \"grid\"");
    c.elm.rcond = e->get("rcond", c.elm.rcond);
    e->reject_unknown();
  }
  if (auto p = r.child("pinn")) {
    TrainConfig& t = c.pinn;
    t.steps_per_iter = p->get("steps_per_iter", t.steps_per_iter);
    t.learning_rate = p->get("learning_rate", t.learning_rate);
    t.adam_beta1 = p->get("adam_beta1", t.adam_beta1);
    t.adam_beta2 = p->get("adam_beta2", t.adam_beta2);
    t.adam_eps = p->get("adam_eps", t.adam_eps);
    t.lambda_origin = p->get("lambda_origin", t.lambda_origin);
    t.lambda_gain = p->get("lambda_gain", t.lambda_gain);
    t.batch = p->get("batch", t.batch);
    t.collocation = p->get("collocation", t.collocation);
    t.log_every = p->get("log_every", t.log_every);
    p->reject_unknown();
    detail::checked("config.pinn", [&] {
      t.validate();
      return 0;
    });
  }
  if (auto v = r.child("verify")) c.verify = parse_verification_spec(*v);
  if (auto s = r.child("simulate")) {
    c.simulate.count = s->get("count", c.simulate.count);
    if (c.simulate.count < 0) throw ConfigError(s->field("count") + ": must be >= 0");
    if (s->has("x0_box")) c.simulate.x0_box = detail::read_box(*s, "x0_box", n);
    c.simulate.T = s->get("T", c.simulate.T);
    c.simulate.h = s->get("h", c.simulate.h);
    c.simulate.tol = s->get("tol", c.simulate.tol);
    c.simulate.write_trajectories = s->get("write_trajectories", c.simulate.write_trajectories);
    if (!(c.simulate.h > 0)) throw ConfigError(s->field("h") + ": must be > 0");
    s->reject_unknown();
  }
  if (c.simulate.T == 0.0) c.simulate.T = bm.kind == BenchmarkKind::lorenz ? 20.0 : 10.0;
  r.reject_unknown();
  c.sync();
  return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace npi

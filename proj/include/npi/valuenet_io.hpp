#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "npi/valuenet.hpp"

namespace npi {

inline constexpr const char* kValueNetFormat = "npi-valuenet/1";

/// Flat record {format, activation, n, m, W (row-major), b, beta, bias_shift}.
/// Doubles are written in shortest round-trip form, so save/load is bit-exact.
inline nlohmann::json to_json(const ValueNet& net) {
  nlohmann::json j;
  j["format"] = kValueNetFormat;
  j["activation"] = to_string(net.activation);
  j["n"] = net.state_dim();
  j["m"] = net.width();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(net.W.size()));
  for (int r = 0; r < net.W.rows(); ++r)
    for (int c = 0; c < net.W.cols(); ++c) w.push_back(net.W(r, c));
  j["W"] = w;
  j["b"] = std::vector<double>(net.b.data(), net.b.data() + net.b.size());
  j["beta"] = std::vector<double>(net.beta.data(), net.beta.data() + net.beta.size());
  j["bias_shift"] = net.bias_shift;
  return j;
}

inline ValueNet value_net_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kValueNetFormat)
      throw std::runtime_error("unsupported value-net format '" + j.at("format").get<std::string>() + "'");
    ValueNet net;
    net.activation = activation_from_string(j.at("activation").get<std::string>());
    const int n = j.at("n").get<int>(), m = j.at("m").get<int>();
    if (n < 1 || m < 1) throw std::runtime_error("value net dimensions must be positive");
    auto w = j.at("W").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    auto beta = j.at("beta").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(m) || b.size() != static_cast<std::size_t>(m) ||
        beta.size() != static_cast<std::size_t>(m))
      throw std::runtime_error("value net array lengths do not match n, m");
    net.W.resize(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) net.W(r, c) = w[static_cast<std::size_t>(r * n + c)];
    net.b = Eigen::Map<Eigen::VectorXd>(b.data(), m);
    net.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), m);
    net.bias_shift = j.at("bias_shift").get<double>();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed value net: ") + e.what());
  }
}

inline void save_value_net(const ValueNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(net).dump(1) << '\n';
}

inline ValueNet load_value_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse " + path + ": " + e.what());
  }
  return value_net_from_json(j);
}

}  // namespace npi

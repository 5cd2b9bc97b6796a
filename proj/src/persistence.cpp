#include "d2dspl/persistence.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace d2dspl::io {

using json = nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Fault("format_double: conversion failed");
  return std::string(buf, end);
}

std::string policy_to_json(const ac::PolicyParams& theta, const ac::ValueWeights& w) {
  json j;
  j["n_states"] = theta.n_states();
  j["n_actions"] = theta.n_actions();
  json rows = json::array();
  for (std::size_t s = 0; s < theta.n_states(); ++s) {
    auto r = theta.row(s);
    rows.push_back(json(std::vector<double>(r.begin(), r.end())));
  }
  j["theta"] = std::move(rows);
  j["w"] = w.w;
  return j.dump() + "\n";
}

void policy_from_json(const std::string& text, ac::PolicyParams& theta, ac::ValueWeights& w) {
  try {
    const json j = json::parse(text);
    const auto n_states = j.at("n_states").get<std::size_t>();
    const auto n_actions = j.at("n_actions").get<std::size_t>();
    const json& rows = j.at("theta");
    if (n_states == 0 || n_actions == 0 || rows.size() != n_states) {
      throw ValidationError("policy: theta row count mismatch");
    }
    ac::PolicyParams t(n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s) {
      if (rows[s].size() != n_actions) throw ValidationError("policy: theta row width mismatch");
      for (std::size_t a = 0; a < n_actions; ++a) t.at(s, a) = rows[s][a].get<double>();
    }
    ac::ValueWeights v;
    v.w = j.at("w").get<std::vector<double>>();
    if (v.w.size() != n_states) throw ValidationError("policy: w length mismatch");
    theta = std::move(t);
    w = std::move(v);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("policy: malformed JSON: ") + e.what());
  }
}

void write_buffer(std::ostream& out, const ac::Buffer& buffer, std::size_t n_states,
                  std::size_t n_state_vars) {
  out << "d2dspl-buffer 1\n";
  out << "n_states " << n_states << " n_state_vars " << n_state_vars << " episodes "
      << buffer.size() << '\n';
  for (std::size_t e = 0; e < buffer.size(); ++e) {
    const auto& rec = buffer[e];
    out << "episode " << e << " r_total " << format_double(rec.r_total) << " entries "
        << rec.n_visited() << '\n';
    for (std::size_t k = 0; k < rec.n_visited(); ++k) {
      out << rec.states()[k] << ' ' << rec.counts()[k];
      for (double v : rec.sum(k)) out << ' ' << format_double(v);
      out << '\n';
    }
  }
}

ac::Buffer read_buffer(std::istream& in) {
  auto fail = [](const std::string& what) { return ValidationError("buffer file: " + what); };
  std::string tag, key;
  int version = 0;
  if (!(in >> tag >> version) || tag != "d2dspl-buffer" || version != 1) {
    throw fail("bad magic/version");
  }
  std::size_t n_states = 0, n_sv = 0, episodes = 0;
  std::string k1, k2, k3;
  if (!(in >> k1 >> n_states >> k2 >> n_sv >> k3 >> episodes) || k1 != "n_states" ||
      k2 != "n_state_vars" || k3 != "episodes") {
    throw fail("bad dimensions line");
  }
  ac::Buffer buffer;
  buffer.reserve(episodes);
  std::vector<double> sum(n_sv);
  for (std::size_t e = 0; e < episodes; ++e) {
    std::string ke, kr, kn;
    std::size_t index = 0, entries = 0;
    double r_total = 0.0;
    if (!(in >> ke >> index >> kr >> r_total >> kn >> entries) || ke != "episode" ||
        kr != "r_total" || kn != "entries" || index != e) {
      throw fail("bad episode header for episode " + std::to_string(e));
    }
    ac::EpisodeRecord rec(n_states, n_sv);
    rec.r_total = r_total;
    for (std::size_t k = 0; k < entries; ++k) {
      std::size_t s = 0;
      std::uint64_t count = 0;
      if (!(in >> s >> count)) throw fail("truncated entry in episode " + std::to_string(e));
      for (auto& v : sum) {
        if (!(in >> v)) throw fail("truncated entry in episode " + std::to_string(e));
      }
      try {
        rec.append(s, count, sum);
      } catch (const UsageError& err) {
        throw fail(err.what());
      }
    }
    buffer.push_back(std::move(rec));
  }
  return buffer;
}

void write_buffer_summary(std::ostream& out, const ac::Buffer& buffer) {
  out << "episode,r_total,steps,visited_states\n";
  for (std::size_t e = 0; e < buffer.size(); ++e) {
    out << e << ',' << format_double(buffer[e].r_total) << ',' << buffer[e].steps() << ','
        << buffer[e].n_visited() << '\n';
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Fault("cannot write file: " + path);
  out << contents;
  if (!out) throw Fault("write failed: " + path);
}

}  // namespace d2dspl::io

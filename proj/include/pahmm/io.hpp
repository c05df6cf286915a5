#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pahmm/config.hpp"
#include "pahmm/preprocess.hpp"
#include "pahmm/sampler.hpp"
#include "pahmm/series.hpp"
#include "pahmm/simulate.hpp"

namespace pahmm {

using json = nlohmann::json;

namespace io_detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string fmt_fixed(double v, int places = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return f;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

}  // namespace io_detail

// ---- minute-level CSV: timestamp,hr,steps (empty cell = missing) ----

inline MinuteSeries read_minute_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  MinuteSeries m;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = io_detail::split_csv_line(line);
    if (first && cells.size() >= 1 && cells[0] == "timestamp") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 3)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 3 columns");
    m.t_min.push_back(parse_timestamp_or_throw(cells[0]));
    m.hr.push_back(cells[1].empty() ? kMissing : std::stod(cells[1]));
    m.steps.push_back(cells[2].empty() ? kMissing : std::stod(cells[2]));
  }
  m.validate();
  return m;
}

inline void write_minute_csv(const std::string& path, const MinuteSeries& m) {
  auto f = io_detail::open_out(path);
  f << "timestamp,hr,steps\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    f << format_timestamp(m.t_min[i]) << ',';
    if (std::isfinite(m.hr[i])) f << io_detail::fmt_fixed(m.hr[i]);
    f << ',';
    if (std::isfinite(m.steps[i])) f << io_detail::fmt_fixed(m.steps[i]);
    f << '\n';
  }
}

// ---- quarter-hour CSV: timestamp,hr,steps,missing ----

inline void write_quarter_csv(const std::string& path, const PatientSeries& s) {
  auto f = io_detail::open_out(path);
  f << "timestamp,hr,steps,missing\n";
  for (std::size_t t = 0; t < s.rows(); ++t) {
    f << format_timestamp(s.t_min[t]) << ',';
    if (!s.mask[t]) {
      f << io_detail::fmt_fixed(s.at(t, 0)) << ','
        << io_detail::fmt_fixed(s.at(t, 1));
    } else {
      f << ',';
    }
    f << ',' << (s.mask[t] ? 1 : 0) << '\n';
  }
}

inline PatientSeries read_quarter_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  PatientSeries s;
  s.d = 2;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = io_detail::split_csv_line(line);
    if (first && cells[0] == "timestamp") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 4)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 4 columns");
    s.t_min.push_back(parse_timestamp_or_throw(cells[0]));
    const bool missing = cells[3] == "1";
    s.mask.push_back(missing ? 1 : 0);
    if (missing) {
      s.y.push_back(kMissing);
      s.y.push_back(kMissing);
    } else {
      s.y.push_back(std::stod(cells[1]));
      s.y.push_back(std::stod(cells[2]));
    }
  }
  s.segment_starts = compute_segment_starts(s.t_min);
  require_valid(s);
  return s;
}

// ---- truth CSV: timestamp,z_true,hr_true,steps_true,masked ----

struct TruthFile {
  std::vector<std::int64_t> t_min;
  std::vector<std::uint8_t> z_true;  // length T + 1, [0] is z_0
  std::vector<double> y_true;        // T x 2, every row
  std::vector<std::uint8_t> masked;  // artificially masked rows
};

inline void write_truth_csv(const std::string& path, const SimulatedTruth& truth,
                            const MaskedDataset& masked) {
  auto f = io_detail::open_out(path);
  f << "timestamp,z_true,hr_true,steps_true,masked\n";
  // z_0 is carried on a header-like pseudo row with no timestamp.
  f << "z0," << static_cast<int>(truth.z_true[0]) + 1 << ",,,\n";
  std::vector<std::uint8_t> is_masked(truth.series.rows(), 0);
  for (auto r : masked.masked_rows) is_masked[r] = 1;
  for (std::size_t t = 0; t < truth.series.rows(); ++t) {
    f << format_timestamp(truth.series.t_min[t]) << ','
      << static_cast<int>(truth.z_true[t + 1]) + 1 << ','
      << io_detail::fmt_fixed(truth.series.at(t, 0)) << ','
      << io_detail::fmt_fixed(truth.series.at(t, 1)) << ','
      << (is_masked[t] ? 1 : 0) << '\n';
  }
}

inline TruthFile read_truth_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  TruthFile tf;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = io_detail::split_csv_line(line);
    if (first && cells[0] == "timestamp") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 5)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 5 columns");
    if (cells[0] == "z0") {
      tf.z_true.insert(tf.z_true.begin(),
                       static_cast<std::uint8_t>(std::stoi(cells[1]) - 1));
      continue;
    }
    tf.t_min.push_back(parse_timestamp_or_throw(cells[0]));
    tf.z_true.push_back(static_cast<std::uint8_t>(std::stoi(cells[1]) - 1));
    tf.y_true.push_back(std::stod(cells[2]));
    tf.y_true.push_back(std::stod(cells[3]));
    tf.masked.push_back(cells[4] == "1" ? 1 : 0);
  }
  return tf;
}

// ---- posterior draw NDJSON + sidecar metadata ----

inline json run_length_encode(std::span<const std::uint8_t> z) {
  json rle = json::array();
  std::size_t i = 0;
  while (i < z.size()) {
    std::size_t j = i;
    while (j < z.size() && z[j] == z[i]) ++j;
    rle.push_back(json::array({static_cast<int>(z[i]) + 1, j - i}));
    i = j;
  }
  return rle;
}

inline std::string meta_path_for(const std::string& draws_path) {
  return draws_path + ".meta.json";
}

inline void write_draws_ndjson(const std::string& path, const PosteriorDraws& d) {
  {
    json meta;
    meta["model"] = d.model;
    meta["K"] = d.K;
    meta["d"] = d.d;
    meta["p"] = d.p;
    meta["T"] = d.T;
    meta["baseline_hour"] = d.baseline_hour;
    meta["seed"] = d.seed;
    meta["config_hash"] = d.config_hash;
    meta["first_saved_iter"] = d.first_saved_iter;
    meta["n_draws"] = d.n_draws();
    meta["masked_rows"] = d.masked_rows;
    auto f = io_detail::open_out(meta_path_for(path));
    f << meta.dump() << '\n';
  }
  auto f = io_detail::open_out(path);
  const std::size_t npar = d.zeta_stride() / d.K;
  for (std::size_t i = 0; i < d.n_draws(); ++i) {
    json rec;
    rec["iter"] = d.saved_iters[i];
    if (d.model == "nhmm") {
      auto zd = d.zeta_draw(i);
      json zeta = json::array();
      for (int r = 0; r < d.K; ++r)
        zeta.push_back(std::vector<double>(zd.begin() + r * npar,
                                           zd.begin() + (r + 1) * npar));
      rec["zeta"] = std::move(zeta);
    } else {
      auto qd = d.q_draw(i);
      json q = json::array();
      for (int r = 0; r < d.K; ++r)
        q.push_back(std::vector<double>(qd.begin() + r * d.K,
                                        qd.begin() + (r + 1) * d.K));
      rec["Q"] = std::move(q);
    }
    auto md = d.mu_draw(i);
    json mu = json::array();
    for (int j = 0; j < d.K; ++j)
      mu.push_back(std::vector<double>(md.begin() + j * d.d,
                                       md.begin() + (j + 1) * d.d));
    rec["mu"] = std::move(mu);
    auto sd = d.sigma_draw(i);
    json sig = json::array();
    for (int j = 0; j < d.K; ++j)
      sig.push_back(std::vector<double>(sd.begin() + j * d.d * d.d,
                                        sd.begin() + (j + 1) * d.d * d.d));
    rec["sigma"] = std::move(sig);
    rec["z_rle"] = run_length_encode(d.z_draw(i));
    auto imp = d.imputed_draw(i);
    rec["imputed"] = std::vector<double>(imp.begin(), imp.end());
    f << rec.dump() << '\n';
  }
}

inline PosteriorDraws read_draws_ndjson(const std::string& path) {
  PosteriorDraws d;
  {
    auto f = io_detail::open_in(meta_path_for(path));
    json meta;
    f >> meta;
    d.model = meta.at("model").get<std::string>();
    d.K = meta.at("K").get<int>();
    d.d = meta.at("d").get<int>();
    d.p = meta.at("p").get<int>();
    d.T = meta.at("T").get<std::size_t>();
    d.baseline_hour = meta.at("baseline_hour").get<int>();
    d.seed = meta.at("seed").get<std::uint64_t>();
    d.config_hash = meta.at("config_hash").get<std::string>();
    d.first_saved_iter = meta.at("first_saved_iter").get<int>();
    d.masked_rows = meta.at("masked_rows").get<std::vector<std::size_t>>();
  }
  auto f = io_detail::open_in(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    d.saved_iters.push_back(rec.at("iter").get<int>());
    if (d.model == "nhmm") {
      for (const auto& row : rec.at("zeta"))
        for (const auto& v : row) d.zeta.push_back(v.get<double>());
    } else {
      for (const auto& row : rec.at("Q"))
        for (const auto& v : row) d.qmat.push_back(v.get<double>());
    }
    for (const auto& row : rec.at("mu"))
      for (const auto& v : row) d.mu.push_back(v.get<double>());
    for (const auto& row : rec.at("sigma"))
      for (const auto& v : row) d.sigma.push_back(v.get<double>());
    std::size_t n = 0;
    for (const auto& run : rec.at("z_rle")) {
      const int state = run[0].get<int>() - 1;
      const std::size_t len = run[1].get<std::size_t>();
      for (std::size_t i = 0; i < len; ++i)
        d.z.push_back(static_cast<std::uint8_t>(state));
      n += len;
    }
    if (n != d.T + 1)
      throw std::runtime_error(path + ": z_rle expands to wrong length");
    for (const auto& v : rec.at("imputed")) d.imputed.push_back(v.get<double>());
  }
  return d;
}

// ---- flat key = value run configuration ----

inline std::map<std::string, std::string> parse_kv_config(const std::string& path) {
  auto f = io_detail::open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw std::runtime_error(path + ": duplicate key " + key);
  }
  return kv;
}

inline ModelConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig cfg;
  auto as_int = [](const std::string& v) { return std::stoi(v); };
  auto as_double = [](const std::string& v) { return std::stod(v); };
  auto as_bool = [](const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::runtime_error("expected boolean, got " + v);
  };
  auto as_list = [](const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
  };
  for (const auto& [key, val] : kv) {
    if (key == "K") cfg.K = as_int(val);
    else if (key == "baseline_hour") cfg.baseline_hour = val == "auto" ? -1 : as_int(val);
    else if (key == "zeta0") cfg.zeta0 = as_double(val);
    else if (key == "sigma0_sq") cfg.sigma0_sq = as_double(val);
    else if (key == "niw_kappa0") cfg.niw_kappa0 = as_double(val);
    else if (key == "niw_nu0") cfg.niw_nu0 = as_double(val);
    else if (key == "niw_mu0") cfg.niw_mu0 = as_list(val);
    else if (key == "niw_lambda0_diag") cfg.niw_lambda0_diag = as_list(val);
    else if (key == "aug_strength") cfg.aug_strength = as_int(val);
    else if (key == "day_len") cfg.day_len = as_int(val);
    else if (key == "init_iters") cfg.init_iters = as_int(val);
    else if (key == "burn_iters") cfg.burn_iters = as_int(val);
    else if (key == "iters") cfg.iters = as_int(val);
    else if (key == "pi") cfg.pi = val == "uniform" ? std::vector<double>{} : as_list(val);
    else if (key == "dirichlet_alpha") cfg.dirichlet_alpha = as_double(val);
    else if (key == "kappa_scaled_mean") cfg.kappa_scaled_mean = as_bool(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else throw std::runtime_error("unknown config key: " + key);
  }
  cfg.validate();
  return cfg;
}

// ---- scenario NDJSON: {gamma, nu, profile, seed, T} per line ----

struct Scenario {
  double gamma = 0.0;
  double nu = 0.0;
  std::string profile = "high";
  std::uint64_t seed = 1;
  std::size_t T = 8000;
};

inline std::vector<Scenario> read_scenarios(const std::string& path) {
  auto f = io_detail::open_in(path);
  std::vector<Scenario> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, true);
    Scenario s;
    s.gamma = rec.at("gamma").get<double>();
    s.nu = rec.at("nu").get<double>();
    s.profile = rec.value("profile", std::string("high"));
    s.seed = rec.value("seed", 1ull);
    s.T = rec.value("T", static_cast<std::size_t>(8000));
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_scenario_json(const std::string& path, const Scenario& s) {
  json rec;
  rec["gamma"] = s.gamma;
  rec["nu"] = s.nu;
  rec["profile"] = s.profile;
  rec["seed"] = s.seed;
  rec["T"] = s.T;
  auto f = io_detail::open_out(path);
  f << rec.dump(2) << '\n';
}

inline Scenario read_scenario_json(const std::string& path) {
  auto f = io_detail::open_in(path);
  json rec;
  f >> rec;
  Scenario s;
  s.gamma = rec.at("gamma").get<double>();
  s.nu = rec.at("nu").get<double>();
  s.profile = rec.at("profile").get<std::string>();
  s.seed = rec.at("seed").get<std::uint64_t>();
  s.T = rec.at("T").get<std::size_t>();
  return s;
}

// ---- tidy metrics CSV: patient,model,metric,draw,value ----

struct MetricRow {
  std::string patient;
  std::string model;
  std::string metric;
  long draw = -1;  // -1 for aggregate metrics
  double value = 0.0;
};

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricRow>& rows) {
  auto f = io_detail::open_out(path);
  f << "patient,model,metric,draw,value\n";
  for (const auto& r : rows)
    f << r.patient << ',' << r.model << ',' << r.metric << ',' << r.draw << ','
      << io_detail::fmt_fixed(r.value, 6) << '\n';
}

}  // namespace pahmm

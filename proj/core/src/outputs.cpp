#include "collusim/outputs.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace collusim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string header_comment(const ExperimentConfig& cfg) {
  return "# config_hash=" + hash_hex(cfg.config_hash) +
         " master_seed=" + std::to_string(cfg.sim.master_seed) +
         " scaled=" + (cfg.scaled ? std::string("true") : std::string("false")) + "\n";
}

}  // namespace

std::string sessions_csv(const ExperimentConfig& cfg, std::span<const SessionResult> results) {
  std::string out = header_comment(cfg);
  out +=
      "session,converged,action_0,action_1,price_0,price_1,session_price,periods,"
      "cycle_length,window_price,window_symmetric_periods\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const SessionResult& r = results[i];
    out += std::to_string(i);
    out += r.converged ? ",1" : ",0";
    if (r.convergent_actions) {
      const auto [a, b] = *r.convergent_actions;
      out += "," + std::to_string(a) + "," + std::to_string(b);
      out += "," + fmt(cfg.sim.game.action_value(a)) + "," + fmt(cfg.sim.game.action_value(b));
    } else {
      out += ",,,,";
    }
    if (auto p = session_price(r, cfg.sim.game)) {
      out += "," + fmt(*p);
    } else {
      out += ",";
    }
    out += "," + std::to_string(r.periods_elapsed);
    if (r.converged) {
      out += "," + std::to_string(r.cycle ? r.cycle->size() : 1u);
    } else {
      out += ",";
    }
    if (r.window_weighted_price) {
      out += "," + fmt(*r.window_weighted_price);
    } else {
      out += ",";
    }
    out += "," + std::to_string(r.window_symmetric_periods) + "\n";
  }
  return out;
}

std::string trace_csv(const ExperimentConfig& cfg, std::uint32_t session_index,
                      const SessionResult& result) {
  std::string out = header_comment(cfg);
  out.insert(out.size() - 1, " session=" + std::to_string(session_index));
  out += "t,a1,a2,price1,price2,q2nd_1,q2nd_2,sustainable_1,sustainable_2,stationary\n";
  char buf[256];
  for (const TracePoint& p : result.trace) {
    std::snprintf(buf, sizeof(buf), "%llu,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(p.t), p.action[0], p.action[1], p.price[0],
                  p.price[1], p.q_second[0], p.q_second[1], p.sustainable[0], p.sustainable[1],
                  p.stationary);
    out += buf;
  }
  return out;
}

std::string summary_json(const ExperimentConfig& cfg, std::span<const SessionResult> results,
                         const AggregateReport& report) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(cfg.resolved_json);
  j["config_hash"] = hash_hex(cfg.config_hash);
  j["master_seed"] = cfg.sim.master_seed;
  j["scaled"] = cfg.scaled;

  nlohmann::json agg;
  if (std::isnan(report.mean_price)) {
    agg["mean_price"] = nullptr;
    agg["collusion_index"] = nullptr;
  } else {
    agg["mean_price"] = report.mean_price;
    agg["collusion_index"] = report.collusion_index;
  }
  agg["std_error"] = report.std_error;
  agg["share_converged"] = report.share_converged;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [len, count] : report.cycle_length_histogram) {
    hist[std::to_string(len)] = count;
  }
  agg["cycle_length_histogram"] = hist;
  if (report.mean_window_price) agg["mean_window_price"] = *report.mean_window_price;
  j["aggregate"] = agg;

  nlohmann::json sessions = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const SessionResult& r = results[i];
    nlohmann::json s;
    s["session"] = i;
    s["converged"] = r.converged;
    if (r.convergent_actions) {
      s["actions"] = {r.convergent_actions->first, r.convergent_actions->second};
    }
    if (r.cycle) {
      nlohmann::json cyc = nlohmann::json::array();
      for (const auto& [a, b] : *r.cycle) cyc.push_back({a, b});
      s["cycle"] = cyc;
    }
    if (auto p = session_price(r, cfg.sim.game)) s["price"] = *p;
    s["periods"] = r.periods_elapsed;
    if (r.window_weighted_price) s["window_price"] = *r.window_weighted_price;
    sessions.push_back(s);
  }
  j["sessions"] = sessions;
  return j.dump(2);
}

std::string sweep_csv(const ExperimentConfig& cfg, std::span<const SweepRow> rows) {
  std::string out = header_comment(cfg);
  for (const auto& axis : cfg.axes) out += axis.param + ",";
  out += "mean_price,collusion_index,share_converged,n_sessions,std_error,mean_window_price\n";
  for (const SweepRow& row : rows) {
    for (double v : row.axis_values) out += fmt(v) + ",";
    const AggregateReport& a = row.report;
    out += (std::isnan(a.mean_price) ? std::string("nan") : fmt(a.mean_price)) + ",";
    out += (std::isnan(a.collusion_index) ? std::string("nan") : fmt(a.collusion_index)) + ",";
    out += fmt(a.share_converged) + "," + std::to_string(row.sessions) + "," + fmt(a.std_error) +
           ",";
    out += a.mean_window_price ? fmt(*a.mean_window_price) : std::string("nan");
    out += "\n";
  }
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << contents;
}

}  // namespace collusim

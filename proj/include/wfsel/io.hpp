#pragma once

// Serialization: JSON run records, JSON-lines samples and pools, chain CSV,
// and frequency-file ingestion.

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfsel/core.hpp"
#include "wfsel/density.hpp"
#include "wfsel/inference.hpp"
#include "wfsel/sampler.hpp"

namespace wfsel {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kRecordSchema = 1;

using json = nlohmann::ordered_json;

namespace detail {

// JSON has no infinities; they are written as strings.
inline json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double from_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidInput("expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

}  // namespace detail

inline json to_json(const EssReport& e) {
  return {{"ess", detail::number(e.ess)},
          {"n", e.n},
          {"min_weight_fraction", detail::number(e.min_weight_fraction)},
          {"max_weight_fraction", detail::number(e.max_weight_fraction)},
          {"reliable", e.reliable()}};
}

inline json to_json(const MleResult& r) {
  json j;
  j["sigma_hat"] = detail::number(r.sigma_hat);
  if (r.theta_hat) j["theta_hat"] = *r.theta_hat;
  j["status"] = to_string(r.status);
  j["score_at_solution"] = detail::number(r.score_at_solution);
  j["bracket"] = {detail::number(r.bracket.first),
                  detail::number(r.bracket.second)};
  j["ess_at_solution"] = detail::number(r.ess_at_solution);
  if (r.theta_hat) j["theta_at_bound"] = r.theta_at_bound;
  if (!std::isnan(r.log_likelihood)) j["log_likelihood"] = r.log_likelihood;
  return j;
}

inline json to_json(const IntervalEstimate& e) {
  json j{{"lower", detail::number(e.lower)},
         {"upper", detail::number(e.upper)},
         {"level", e.level},
         {"method", to_string(e.method)},
         {"alpha_split", {e.alpha_split.first, e.alpha_split.second}}};
  if (e.lower_at_bound || e.upper_at_bound) {
    j["advisory"] = "endpoint at search-range bound; widen the sigma range";
    j["lower_at_bound"] = e.lower_at_bound;
    j["upper_at_bound"] = e.upper_at_bound;
  }
  return j;
}

inline json to_json(const SamplerReport& r) {
  json j{{"method", to_string(r.method)},
         {"n_requested", r.n_requested},
         {"n_proposals", r.n_proposals},
         {"acceptance_rate", r.acceptance_rate},
         {"seed", r.seed}};
  if (r.method == SamplerMethod::independence_mh) {
    j["proposal_concentration"] = r.proposal_concentration;
    j["burn_in"] = r.burn_in;
    j["thinning"] = r.thinning;
    j["low_acceptance"] = r.low_acceptance;
  }
  return j;
}

/// Summary plus optionally the per-replicate estimates.
inline json to_json(const BootstrapResult& b, bool with_estimates = false) {
  json j{{"generator", {{"theta", b.theta}, {"sigma", b.sigma}, {"k", b.k},
                        {"seed", b.seed}}},
         {"replicates", b.estimates.size()},
         {"standard_error", detail::number(b.standard_error)},
         {"n_unbounded", b.n_unbounded},
         {"heavy_tail", b.heavy_tail},
         {"percentile_interval", to_json(b.percentile_interval)},
         {"sampler", to_json(b.sampler)}};
  if (b.heavy_tail) {
    j["advisory"] =
        "more than 20% of replicates unbounded; standard error undefined";
  }
  if (with_estimates) {
    json arr = json::array();
    for (const auto& e : b.estimates) arr.push_back(to_json(e));
    j["estimates"] = std::move(arr);
  }
  return j;
}

inline json to_json(const PriorBounds& p) {
  return {{"theta", {p.theta_lo, p.theta_hi}}, {"sigma", {p.sigma_lo, p.sigma_hi}}};
}

inline json to_json(const PosteriorChain& c) {
  json j{{"length", c.draws.size()},
         {"burn_in", c.burn_in},
         {"seed", c.seed},
         {"acceptance_rate", c.acceptance_rate},
         {"theta_fixed", c.theta_fixed},
         {"prior_bounds", to_json(c.prior)},
         {"proposal",
          {{"theta", {c.proposal.theta_lo, c.proposal.theta_hi}},
           {"sigma_center", c.proposal.sigma_center},
           {"sigma_scale", c.proposal.sigma_scale},
           {"pilot_theta", c.proposal.pilot_theta}}}};
  if (c.mistuned) {
    j["advisory"] = "acceptance rate below 0.02; proposal mistuned";
  }
  return j;
}

inline json to_json(const SimplexPoint& x) {
  json arr = json::array();
  for (double v : x.values()) arr.push_back(v);
  return arr;
}

/// One SimplexPoint per line: {"i": index, "x": [...], "h": ...}.
inline void write_samples_jsonl(std::ostream& out,
                                const std::vector<SimplexPoint>& draws) {
  for (std::size_t i = 0; i < draws.size(); ++i) {
    json j{{"i", i}, {"x", to_json(draws[i])},
           {"h", homozygosity(draws[i]).value}};
    out << j.dump() << '\n';
  }
}

inline std::vector<SimplexPoint> read_samples_jsonl(std::istream& in) {
  std::vector<SimplexPoint> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    out.emplace_back(j.at("x").get<std::vector<double>>(), kInternalSumTolerance);
  }
  return out;
}

/// Chain trace as CSV; needs a chain sampled with keep_trace.
inline void write_chain_csv(std::ostream& out, const PosteriorChain& c) {
  out << "iteration,theta,sigma,log_posterior,accepted\n";
  for (std::size_t i = 0; i < c.trace.size(); ++i) {
    const auto& s = c.trace[i];
    out << i << ',' << detail::fmt_double(s.theta) << ','
        << detail::fmt_double(s.sigma) << ','
        << detail::fmt_double(s.log_posterior) << ',' << (s.accepted ? 1 : 0)
        << '\n';
  }
}

/// Pool as JSON lines: a header, then one line per draw with the draw
/// values (when retained), h, base log-weight b, sum log x s and log q.
inline void save_pool(std::ostream& out, const WeightedPool& pool) {
  const auto& d = pool.draw_set();
  const auto& t = pool.target_theta();
  json comps = json::array();
  for (const auto& c : d.components) {
    comps.push_back({{"a", c.concentration}, {"n", c.count}});
  }
  json header{{"format", "wfsel-pool"},
              {"version", kRecordSchema},
              {"k", d.k},
              {"n", d.size()},
              {"seed", d.seed},
              {"theta", t.is_symmetric() ? json(t.total()) : json(t.per_allele())},
              {"components", comps},
              {"ess_floor", pool.ess_floor()},
              {"retains_draws", pool.has_draws()}};
  out << header.dump() << '\n';
  const auto b = pool.base_log_weights();
  for (std::size_t i = 0; i < d.size(); ++i) {
    json line;
    if (pool.has_draws()) {
      const auto x = pool.draw(i);
      line["x"] = std::vector<double>(x.begin(), x.end());
    }
    line["h"] = d.h[i];
    line["b"] = b[i];
    line["s"] = d.sum_log_x[i];
    line["q"] = d.log_proposal[i];
    out << line.dump() << '\n';
  }
}

inline WeightedPool load_pool(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty pool file");
  const auto header = json::parse(line);
  if (header.value("format", "") != "wfsel-pool") {
    throw InvalidInput("not a pool file");
  }
  auto set = std::make_shared<DrawSet>();
  set->k = header.at("k").get<std::size_t>();
  set->seed = header.at("seed").get<std::uint64_t>();
  for (const auto& c : header.at("components")) {
    set->components.push_back(
        {c.at("a").get<double>(), c.at("n").get<std::size_t>()});
  }
  const auto& th = header.at("theta");
  const MutationParams theta =
      th.is_array() ? MutationParams::general(th.get<std::vector<double>>())
                    : MutationParams::symmetric(th.get<double>(), set->k);
  const std::size_t n = header.at("n").get<std::size_t>();
  std::vector<double> b;
  b.reserve(n);
  set->h.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    if (j.contains("x")) {
      const auto x = j["x"].get<std::vector<double>>();
      if (x.size() != set->k) throw InvalidInput("pool draw has wrong dimension");
      set->values.insert(set->values.end(), x.begin(), x.end());
    }
    set->h.push_back(j.at("h").get<double>());
    b.push_back(j.at("b").get<double>());
    set->sum_log_x.push_back(j.at("s").get<double>());
    set->log_proposal.push_back(j.at("q").get<double>());
  }
  if (set->h.size() != n) throw InvalidInput("pool file is truncated");
  if (!set->values.empty() && set->values.size() != n * set->k) {
    throw InvalidInput("pool file mixes lines with and without draws");
  }
  return WeightedPool(std::move(set), theta, std::move(b),
                      header.at("ess_floor").get<double>());
}

struct Dataset {
  std::string label;
  SimplexPoint x;
};

/// Reads datasets from a file: either JSON ({"k", "frequencies", "label"},
/// or an array of those) or plain text with one comma-separated dataset per
/// line. Blank lines and lines starting with '#' are skipped.
inline std::vector<Dataset> read_datasets(std::istream& in,
                                          const std::string& source) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<Dataset> out;
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw InvalidInput(source + ": " + e.what());
    }
    auto one = [&](const json& d, std::size_t idx) {
      if (!d.contains("frequencies")) {
        throw InvalidInput(source + ": dataset " + std::to_string(idx) +
                           " has no \"frequencies\"");
      }
      auto f = d.at("frequencies").get<std::vector<double>>();
      if (d.contains("k") && d.at("k").get<std::size_t>() != f.size()) {
        throw InvalidInput(source + ": \"k\" = " +
                           std::to_string(d.at("k").get<std::size_t>()) +
                           " but " + std::to_string(f.size()) +
                           " frequencies given");
      }
      out.push_back({d.value("label", source + "#" + std::to_string(idx)),
                     SimplexPoint(std::move(f), kIngestSumTolerance)});
    };
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) one(j[i], i);
    } else {
      one(j, 0);
    }
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos || line[p] == '#') continue;
    try {
      out.push_back({source + ":" + std::to_string(lineno),
                     parse_frequencies(line)});
    } catch (const InvalidInput& e) {
      throw InvalidInput(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw InvalidInput(source + ": no datasets found");
  return out;
}

inline std::vector<Dataset> read_datasets_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open data file " + path);
  return read_datasets(in, path);
}

}  // namespace wfsel

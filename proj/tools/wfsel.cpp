// wfsel: simulate, analyze and run studies on Wright-Fisher k-allele
// stationary distributions with symmetric selection.
//
// Exit codes: 0 success (instability statuses included), 1 computation
// failure, 2 usage or input error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wfsel/wfsel.hpp"

namespace {

using wfsel::json;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::size_t> pool_size;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& s) {
  if (s) return *s;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::size_t env_pool_size(std::size_t fallback) {
  if (const char* env = std::getenv("WFSEL_POOL_SIZE")) {
    try {
      const long long v = std::stoll(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
    throw wfsel::InvalidInput("WFSEL_POOL_SIZE must be a positive integer");
  }
  return fallback;
}

// FNV-1a over the shortest round-trip text of each frequency.
std::string dataset_hash(const wfsel::SimplexPoint& x) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : x.values()) {
    for (char c : wfsel::detail::fmt_double(v) + ",") {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

wfsel::Dataset load_data(const std::string& spec, std::size_t index) {
  if (auto named = wfsel::datasets::by_name(spec)) return {spec, *named};
  if (std::filesystem::exists(spec)) {
    auto sets = wfsel::read_datasets_file(spec);
    if (index >= sets.size()) {
      throw wfsel::InvalidInput(spec + " holds " + std::to_string(sets.size()) +
                                " datasets; --index " + std::to_string(index) +
                                " is out of range");
    }
    return sets[index];
  }
  return {"inline", wfsel::parse_frequencies(spec)};
}

json record_base(const std::string& command, const CLI::App& app,
                 std::uint64_t seed, unsigned threads) {
  json flags = json::object();
  for (const auto* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto res = opt->results();
    std::string name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    if (res.size() == 1) {
      flags[name] = res.front();
    } else {
      flags[name] = res;
    }
  }
  return {{"schema", wfsel::kRecordSchema},
          {"version", wfsel::kVersion},
          {"command", command},
          {"flags", flags},
          {"seed", seed},
          {"threads", wfsel::resolve_threads(threads)}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  if (p.extension() == ".csv" || p.extension() == ".jsonl" ||
      p.extension() == ".json") {
    p.replace_extension();
  }
  return p.string() + suffix;
}

std::string fmt(double v, int prec = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(prec) << std::fixed << v;
  return s.str();
}

// simulate -------------------------------------------------------------

struct SimulateArgs {
  std::size_t k = 0;
  double theta = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
  std::string out;
  std::string record;
  double sigma_switch = 50.0;
};

int run_simulate(const SimulateArgs& a, const Common& c, const CLI::App& app) {
  if (a.n == 0) throw wfsel::InvalidInput("--n must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = resolve_seed(c.seed);
  const auto mp = wfsel::MutationParams::symmetric(a.theta, a.k);
  std::vector<wfsel::SimplexPoint> draws;
  json method;
  if (a.sigma == 0.0) {
    draws = wfsel::sample_neutral(mp, a.n, seed, c.threads);
    method = {{"method", "neutral-dirichlet"}};
  } else {
    wfsel::SamplerConfig sc;
    sc.threads = c.threads;
    sc.sigma_switch = a.sigma_switch;
    auto s = wfsel::sample_selection(mp, a.sigma, a.n, seed, sc);
    draws = std::move(s.draws);
    method = wfsel::to_json(s.report);
  }
  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + a.out + " for writing");
    wfsel::write_samples_jsonl(out, draws);
  }
  double hbar = 0.0;
  for (const auto& x : draws) hbar += wfsel::homozygosity(x).value;
  hbar /= static_cast<double>(draws.size());

  auto rec = record_base("simulate", app, seed, c.threads);
  rec["config"] = {{"k", a.k}, {"theta", a.theta}, {"sigma", a.sigma},
                   {"n", a.n}, {"sigma_switch", a.sigma_switch}};
  rec["outputs"] = {{"samples", a.out}, {"sampler", method},
                    {"mean_homozygosity", hbar}};
  rec["timing_seconds"] = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
  const std::string record = a.record.empty() ? with_suffix(a.out, ".run.json") : a.record;
  write_json(record, rec);

  std::cout << "simulated " << draws.size() << " populations (k=" << a.k
            << ", theta=" << a.theta << ", sigma=" << a.sigma << ")\n"
            << "method: " << method.value("method", "neutral-dirichlet") << "\n"
            << "mean homozygosity: " << fmt(hbar) << "\n"
            << "seed: " << seed << "\n"
            << "samples: " << a.out << "\nrecord: " << record << "\n";
  return 0;
}

// analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string data;
  std::size_t index = 0;
  std::string method = "mle";
  double alpha = 0.05;
  std::optional<double> alpha1, alpha2;
  std::size_t m = 10'000;
  std::size_t chain_length = 100'000;
  std::size_t burn_in = 2000;
  std::vector<double> prior_theta{0.0, 50.0};
  std::vector<double> prior_sigma{-100.0, 1000.0};
  std::optional<double> fix_theta;
  std::vector<double> sigma_range{-500.0, 2000.0};
  bool joint_replicates = false;
  std::string out;
  std::string chain_csv;
};

void print_mle(const wfsel::MleResult& r) {
  std::cout << "status:      " << wfsel::to_string(r.status) << "\n";
  if (r.theta_hat) std::cout << "theta_hat:   " << fmt(*r.theta_hat) << "\n";
  std::cout << "sigma_hat:   " << fmt(r.extended_value()) << "\n"
            << "score:       " << std::scientific << std::setprecision(2)
            << r.score_at_solution << std::defaultfloat << "\n"
            << "ess:         " << fmt(r.ess_at_solution, 0) << "\n";
  if (r.theta_at_bound) std::cout << "warning: theta optimum at search bound\n";
  if (!r.converged()) {
    std::cout << "note: the likelihood is unbounded in sigma for these data\n";
  }
}

void print_interval(const wfsel::IntervalEstimate& e) {
  std::cout << wfsel::to_string(e.method) << " " << fmt(100 * e.level, 1)
            << "% interval: (" << fmt(e.lower, 2) << ", " << fmt(e.upper, 2)
            << ")\n";
  if (e.lower_at_bound || e.upper_at_bound) {
    std::cout << "advisory: endpoint at search-range bound; widen --sigma-range\n";
  }
}

int run_analyze(const AnalyzeArgs& a, const Common& c, const CLI::App& app) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = resolve_seed(c.seed);
  const auto ds = load_data(a.data, a.index);
  const auto& x = ds.x;
  const std::size_t k = x.k();
  const auto h = wfsel::homozygosity(x);

  auto rec = record_base("analyze", app, seed, c.threads);
  json input{{"label", ds.label}, {"k", k}, {"frequencies", wfsel::to_json(x)},
             {"hash", dataset_hash(x)}, {"homozygosity", h.value}};
  rec["inputs"] = input;
  json outputs;

  std::cout << "data: " << ds.label << " (k=" << k << ", h=" << fmt(h.value, 6)
            << ")\nseed: " << seed << "\n";

  const std::size_t default_pool = a.method == "posterior" ? 50'000
                                   : a.method == "bootstrap" ? 100'000
                                                             : 1'000'000;
  const std::size_t pool_size = c.pool_size.value_or(env_pool_size(default_pool));
  rec["config"] = {{"method", a.method}, {"pool_size", pool_size}};

  // Fit used by mle, bootstrap, and monotone-ci when theta is not fixed.
  auto fit = [&]() {
    if (a.fix_theta) {
      wfsel::PoolOptions po;
      po.n = pool_size;
      po.seed = wfsel::derive_seed(seed, wfsel::id(wfsel::StreamId::pool), 1);
      po.sigma_reach = a.sigma_range[1];
      po.retain_draws = false;
      po.threads = c.threads;
      const auto pool =
          wfsel::build_pool(wfsel::MutationParams::symmetric(*a.fix_theta, k), po);
      auto r = wfsel::mle_sigma(h, pool);
      r.theta_hat = *a.fix_theta;
      return r;
    }
    wfsel::JointConfig jc;
    jc.pool_size = pool_size;
    jc.threads = c.threads;
    return wfsel::mle_joint(x, seed, jc);
  };

  if (a.method == "mle") {
    const auto r = fit();
    print_mle(r);
    outputs["mle"] = wfsel::to_json(r);
  } else if (a.method == "monotone-ci") {
    double theta;
    if (a.fix_theta) {
      theta = *a.fix_theta;
    } else {
      const auto r = fit();
      outputs["theta_fit"] = wfsel::to_json(r);
      if (!r.theta_hat) throw std::runtime_error("joint fit produced no theta");
      theta = *r.theta_hat;
      std::cout << "theta (joint MLE): " << fmt(theta) << "\n";
    }
    wfsel::PoolOptions po;
    po.n = pool_size;
    po.seed = wfsel::derive_seed(seed, wfsel::id(wfsel::StreamId::pool), 2);
    po.sigma_reach = std::max(std::abs(a.sigma_range[0]), std::abs(a.sigma_range[1]));
    po.retain_draws = false;
    po.threads = c.threads;
    const auto pool = wfsel::build_pool(wfsel::MutationParams::symmetric(theta, k), po);
    const double a1 = a.alpha1.value_or(a.alpha / 2);
    const double a2 = a.alpha2.value_or(a.alpha / 2);
    wfsel::MonotoneCiOptions mo;
    mo.sigma_lo = a.sigma_range[0];
    mo.sigma_hi = a.sigma_range[1];
    const auto ci = wfsel::monotone_ci(h, pool, a1, a2, mo);
    print_interval(ci);
    outputs["theta"] = theta;
    outputs["interval"] = wfsel::to_json(ci);
  } else if (a.method == "bootstrap") {
    const auto r = fit();
    outputs["fit"] = wfsel::to_json(r);
    print_mle(r);
    if (!r.converged()) {
      std::cout << "bootstrap skipped: no finite sigma_hat to simulate from\n";
    } else {
      wfsel::BootstrapConfig bc;
      bc.pool_size = pool_size;
      bc.level = 1.0 - a.alpha;
      bc.joint = a.joint_replicates;
      bc.threads = c.threads;
      const auto b = wfsel::bootstrap(*r.theta_hat, r.sigma_hat, k, a.m, seed, bc);
      std::cout << "replicates:  " << a.m << " (" << b.n_unbounded
                << " unbounded)\nstd error:   " << fmt(b.standard_error, 2)
                << (b.heavy_tail ? "  [undefined: heavy tail]" : "") << "\n";
      print_interval(b.percentile_interval);
      outputs["bootstrap"] = wfsel::to_json(b);
    }
  } else if (a.method == "posterior") {
    wfsel::PriorBounds prior{a.prior_theta[0], a.prior_theta[1], a.prior_sigma[0],
                             a.prior_sigma[1]};
    wfsel::PosteriorConfig pc;
    pc.fixed_theta = a.fix_theta;
    pc.pool_size = pool_size;
    pc.burn_in = a.burn_in;
    pc.keep_trace = !a.chain_csv.empty();
    pc.threads = c.threads;
    const auto chain = wfsel::posterior_sample(x, prior, a.chain_length, seed, pc);
    const auto s = wfsel::posterior_summary(chain, 1.0 - a.alpha);
    std::cout << "prior:       theta in (" << prior.theta_lo << ", " << prior.theta_hi
              << "], sigma in [" << prior.sigma_lo << ", " << prior.sigma_hi << "]\n"
              << "acceptance:  " << fmt(chain.acceptance_rate, 3)
              << (chain.mistuned ? "  [proposal mistuned]" : "") << "\n"
              << "mode:        theta=" << fmt(s.mode_theta) << " sigma="
              << fmt(s.mode_sigma) << "\n";
    print_interval(s.interval);
    outputs["chain"] = wfsel::to_json(chain);
    outputs["interval"] = wfsel::to_json(s.interval);
    outputs["mode"] = {{"theta", s.mode_theta}, {"sigma", s.mode_sigma}};
    outputs["posterior_mean_sigma"] = s.mean_sigma;
    if (!a.chain_csv.empty()) {
      std::ofstream out(a.chain_csv, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + a.chain_csv);
      wfsel::write_chain_csv(out, chain);
      outputs["chain_csv"] = a.chain_csv;
    }
  } else {
    throw wfsel::InvalidInput("unknown method " + a.method);
  }

  rec["outputs"] = outputs;
  rec["timing_seconds"] = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
  if (!a.out.empty()) {
    write_json(a.out, rec);
    std::cout << "record: " << a.out << "\n";
  }
  return 0;
}

// study ----------------------------------------------------------------

int run_study(const std::string& spec_path, const Common& c, const CLI::App& app) {
  const auto start = std::chrono::steady_clock::now();
  std::ifstream in(spec_path);
  if (!in) throw wfsel::InvalidInput("cannot open study spec " + spec_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw wfsel::InvalidInput(spec_path + ": " + e.what());
  }
  auto spec = wfsel::study_spec_from_json(j);
  if (c.seed) spec.seed = *c.seed;
  if (c.pool_size) spec.pool_size = *c.pool_size;
  const auto table = wfsel::run_study(spec, c.threads);
  {
    std::ofstream out(spec.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + spec.output);
    table.write_csv(out);
  }
  const std::string sidecar = with_suffix(spec.output, ".json");
  write_json(sidecar, {{"schema", wfsel::kRecordSchema},
                       {"version", wfsel::kVersion},
                       {"spec", wfsel::to_json(spec)},
                       {"columns", table.header},
                       {"summary", table.summary}});
  auto rec = record_base("study", app, spec.seed, c.threads);
  rec["inputs"] = {{"spec_file", spec_path}, {"spec", wfsel::to_json(spec)}};
  rec["outputs"] = {{"table", spec.output}, {"sidecar", sidecar},
                    {"rows", table.rows.size()}};
  rec["timing_seconds"] = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
  const std::string record = with_suffix(spec.output, ".run.json");
  write_json(record, rec);
  std::cout << "study " << wfsel::to_string(spec.kind) << ": " << table.rows.size()
            << " rows\ntable: " << spec.output << "\nsidecar: " << sidecar
            << "\nrecord: " << record << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference for Wright-Fisher k-allele models with selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wfsel::kVersion);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Master seed (drawn from entropy if omitted)");
    sub->add_option("--threads", common.threads,
                    "Worker cap (default: WFSEL_THREADS or all cores)");
    sub->add_option("--pool-size", common.pool_size,
                    "Importance pool size (default: WFSEL_POOL_SIZE or per method)")
        ->check(CLI::PositiveNumber);
  };

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw populations from the stationary law");
  simulate->add_option("--k", sim.k, "Number of alleles")->required()->check(CLI::Range(2, 1000000));
  simulate->add_option("--theta", sim.theta, "Total scaled mutation rate")
      ->required()->check(CLI::PositiveNumber);
  simulate->add_option("--sigma", sim.sigma, "Selection intensity (0 = neutral)")->required();
  simulate->add_option("--n", sim.n, "Number of populations")->required();
  simulate->add_option("--out", sim.out, "JSON-lines sample file")->required();
  simulate->add_option("--record", sim.record, "Run record path");
  simulate->add_option("--sigma-switch", sim.sigma_switch,
                       "|sigma| above which MCMC replaces rejection");
  add_common(simulate);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Estimate sigma from frequency data");
  analyze->add_option("--data", an.data, "lyme, kir, a data file, or comma-separated frequencies")
      ->required();
  analyze->add_option("--index", an.index, "Dataset index within a multi-dataset file");
  analyze->add_option("--method", an.method, "Estimation method")
      ->check(CLI::IsMember({"mle", "bootstrap", "monotone-ci", "posterior"}));
  analyze->add_option("--alpha", an.alpha, "1 - interval level")->check(CLI::Range(1e-6, 0.999999));
  analyze->add_option("--alpha1", an.alpha1, "Lower tail for monotone-ci");
  analyze->add_option("--alpha2", an.alpha2, "Upper tail for monotone-ci");
  analyze->add_option("--m", an.m, "Bootstrap replicates")->check(CLI::Range(100, 100000000));
  analyze->add_option("--chain-length", an.chain_length, "Posterior draws after burn-in")
      ->check(CLI::Range(1000, 1000000000));
  analyze->add_option("--burn-in", an.burn_in, "Posterior burn-in");
  analyze->add_option("--prior-theta", an.prior_theta, "Uniform prior bounds lo,hi for theta")
      ->delimiter(',')->expected(2);
  analyze->add_option("--prior-sigma", an.prior_sigma, "Uniform prior bounds lo,hi for sigma")
      ->delimiter(',')->expected(2);
  analyze->add_option("--fix-theta", an.fix_theta, "Condition on this theta")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--sigma-range", an.sigma_range, "Sigma search range lo,hi")
      ->delimiter(',')->expected(2);
  analyze->add_flag("--joint-replicates", an.joint_replicates,
                    "Re-estimate theta in every bootstrap replicate");
  analyze->add_option("--out", an.out, "Run record (JSON)");
  analyze->add_option("--chain-csv", an.chain_csv, "Dump the posterior chain as CSV");
  add_common(analyze);

  std::string spec_path;
  auto* study = app.add_subcommand("study", "Run a study described by a JSON spec");
  study->add_option("spec", spec_path, "StudySpec JSON file")->required();
  add_common(study);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return run_simulate(sim, common, *simulate);
    if (*analyze) {
      const bool method_needs_m = an.method == "bootstrap";
      const bool method_posterior = an.method == "posterior";
      if (analyze->count("--m") && !method_needs_m) {
        throw wfsel::InvalidInput("--m applies only to --method bootstrap");
      }
      if ((analyze->count("--chain-length") || analyze->count("--prior-theta") ||
           analyze->count("--prior-sigma") || analyze->count("--chain-csv")) &&
          !method_posterior) {
        throw wfsel::InvalidInput(
            "--chain-length, --prior-*, --chain-csv apply only to --method posterior");
      }
      if ((analyze->count("--alpha1") || analyze->count("--alpha2")) &&
          an.method != "monotone-ci") {
        throw wfsel::InvalidInput("--alpha1/--alpha2 apply only to --method monotone-ci");
      }
      return run_analyze(an, common, *analyze);
    }
    if (*study) return run_study(spec_path, common, *study);
  } catch (const wfsel::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

// Experiment driver for the magicmps library: builds (or reloads) DMRG
// ground states, runs the magic and entanglement estimators, and writes
// one CSV of result rows plus a JSON manifest per experiment.  A small
// `plot` verb turns any of the emitted CSVs into a static SVG figure.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "magicmps/magicmps.h"

#ifndef MAGICMPS_REVISION
#define MAGICMPS_REVISION "unknown"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ------------------------------------------------------------------ plumbing

// Fatal condition inside a run; reported as a JSON error record.
struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(mm_status status, const std::string& context) {
  if (status != MM_OK)
    throw CliError(fmt::format("{}: {}", context, mm_last_error()));
}

struct StateHandle {
  mm_state* ptr = nullptr;

  StateHandle() = default;
  StateHandle(StateHandle&& other) noexcept : ptr(other.ptr) {
    other.ptr = nullptr;
  }
  StateHandle& operator=(StateHandle&& other) noexcept {
    if (this != &other) {
      mm_state_free(ptr);
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  StateHandle(const StateHandle&) = delete;
  StateHandle& operator=(const StateHandle&) = delete;
  ~StateHandle() { mm_state_free(ptr); }

  mm_state** out() { return &ptr; }
  operator const mm_state*() const { return ptr; }
};

struct Stopwatch {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

std::string iso_time_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// -------------------------------------------------------------- result rows

struct ResultRow {
  std::string experiment;
  std::string params;
  int n = 0;
  int chi = 0;
  std::string method;
  std::string observable;
  double value = kNaN;
  double std_error = 0.0;
  double tau = kNaN;
  long long n_samples = 0;
  double wall_time = 0.0;
  unsigned long long seed = 0;
};

std::string csv_num(double v) {
  return std::isnan(v) ? std::string() : fmt::format("{:.12g}", v);
}

void write_csv(const fs::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw CliError(fmt::format("cannot write '{}'", path.string()));
  out << "experiment,params,N,chi,method,observable,value,std_error,tau,"
         "n_samples,wall_time,seed,revision\n";
  for (const ResultRow& r : rows)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{:.3f},{},{}\n",
                       r.experiment, r.params, r.n, r.chi, r.method,
                       r.observable, csv_num(r.value), csv_num(r.std_error),
                       csv_num(r.tau), r.n_samples, r.wall_time, r.seed,
                       MAGICMPS_REVISION);
  if (!out) throw CliError(fmt::format("write failed for '{}'", path.string()));
}

// --------------------------------------------------------------- run context

struct RunContext {
  fs::path out_dir = "out";
  int threads = 1;
  unsigned long long seed = 1;
  std::string config_path;

  std::mutex mutex;
  std::vector<std::string> errors;

  void record_error(std::string message) {
    std::lock_guard<std::mutex> lock(mutex);
    errors.push_back(std::move(message));
  }
};

// Distinct deterministic stream per cell and estimator.
unsigned long long derived_seed(unsigned long long base, std::size_t cell,
                                unsigned long long salt) {
  return base + 1000ULL * static_cast<unsigned long long>(cell) + salt;
}

void write_manifest(RunContext& ctx, const std::string& verb,
                    const ordered_json& config, std::size_t n_rows,
                    const ordered_json& extra) {
  ordered_json m;
  m["experiment"] = verb;
  m["generated"] = iso_time_utc();
  m["revision"] = MAGICMPS_REVISION;
  m["library"] = mm_version();
  m["threads"] = ctx.threads;
  m["seed"] = ctx.seed;
  if (!ctx.config_path.empty()) m["config_file"] = ctx.config_path;
  m["config"] = config;
  m["rows"] = n_rows;
  m["errors"] = ctx.errors;
  for (const auto& item : extra.items()) m[item.key()] = item.value();
  const fs::path path = ctx.out_dir / (verb + "_manifest.json");
  std::ofstream out(path);
  if (!out) throw CliError(fmt::format("cannot write '{}'", path.string()));
  out << m.dump(2) << "\n";
}

// Runs independent cells on a small worker pool; each cell owns its row
// slot, so the output order never depends on scheduling.
void run_cells(int threads, std::vector<std::function<void()>>& cells) {
  if (threads <= 1 || cells.size() <= 1) {
    for (auto& cell : cells) cell();
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < cells.size();
         k = next.fetch_add(1))
      cells[k]();
  };
  std::vector<std::thread> pool;
  const std::size_t n =
      std::min<std::size_t>(static_cast<std::size_t>(threads), cells.size());
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// One measured quantity = one row; failures leave the value empty and are
// collected in the manifest, the run continues.
template <typename Fill>
void measure(RunContext& ctx, std::vector<ResultRow>& rows, ResultRow base,
             const char* method, const char* observable,
             unsigned long long seed, Fill&& fill) {
  base.method = method;
  base.observable = observable;
  base.seed = seed;
  Stopwatch clock;
  try {
    fill(base);
  } catch (const std::exception& e) {
    base.value = kNaN;
    ctx.record_error(fmt::format("{} {} (N={}, chi={}): {}", method,
                                 observable, base.n, base.chi, e.what()));
  }
  base.wall_time = clock.seconds();
  rows.push_back(std::move(base));
}

// ------------------------------------------------------- model and fixtures

struct ModelChoice {
  std::string preset;
  double jz = 0.5;
  double dz = 0.635;
};

void resolve_model(ModelChoice& model) {
  if (model.preset.empty()) return;
  check(mm_preset_params(model.preset.c_str(), &model.jz, &model.dz),
        fmt::format("preset '{}'", model.preset));
}

std::string params_string(double jz, double dz, const std::string& extra = "") {
  std::string out = fmt::format("jz={:.6g};dz={:.6g}", jz, dz);
  if (!extra.empty()) out += ";" + extra;
  return out;
}

struct Blocks {
  std::array<int, 2> a;
  std::array<int, 2> b;
};

// The four quarters of the chain are labelled A,B,C,D from the left edge;
// every partition pair uses blocks of length N/4.
Blocks case_blocks(int n, const std::string& kind) {
  if (n % 4 != 0)
    throw CliError(
        fmt::format("partition cases need N divisible by 4, got {}", n));
  const int q = n / 4;
  if (kind == "BC") return {{q, 2 * q}, {2 * q, 3 * q}};
  if (kind == "AC") return {{0, q}, {2 * q, 3 * q}};
  if (kind == "AD") return {{0, q}, {3 * q, 4 * q}};
  throw CliError(fmt::format("unknown partition case '{}'", kind));
}

struct GroundState {
  StateHandle state;
  double energy = 0.0;
  bool cached = false;
  double wall_time = 0.0;
};

// Disk cache keyed by (N, params, chi, seed); the state lives in the binary
// container with a JSON sidecar for the energy.  Files are published with an
// atomic rename so concurrent cells never observe partial writes.
GroundState ground_state_cached(RunContext& ctx, int n, double jz, double dz,
                                int chi) {
  GroundState result;
  Stopwatch clock;
  const fs::path dir = ctx.out_dir / "cache";
  fs::create_directories(dir);
  const std::string stem =
      fmt::format("gs_N{}_jz{:.8g}_dz{:.8g}_chi{}_seed{}", n, jz, dz, chi,
                  ctx.seed);
  const fs::path state_path = dir / (stem + ".mmps");
  const fs::path meta_path = dir / (stem + ".json");

  if (fs::exists(state_path) && fs::exists(meta_path)) {
    StateHandle loaded;
    std::ifstream meta(meta_path);
    ordered_json info;
    if (mm_state_load(state_path.string().c_str(), loaded.out()) == MM_OK &&
        mm_state_num_sites(loaded) == n && meta &&
        (meta >> info, info.contains("energy"))) {
      result.state = std::move(loaded);
      result.energy = info["energy"].get<double>();
      result.cached = true;
      result.wall_time = clock.seconds();
      return result;
    }
  }

  mm_dmrg_options opts;
  mm_dmrg_options_init(&opts);
  opts.chi_max = chi;
  opts.seed = ctx.seed;
  int converged = 0;
  check(mm_ground_state(n, jz, dz, &opts, result.state.out(), &result.energy,
                        &converged, nullptr, nullptr),
        fmt::format("dmrg N={} chi={}", n, chi));
  if (!converged)
    ctx.record_error(fmt::format(
        "dmrg N={} chi={} jz={:.6g} dz={:.6g}: not converged after {} sweeps",
        n, chi, jz, dz, opts.max_sweeps));

  const std::string tag = fmt::format(
      ".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  const fs::path state_tmp = dir / (stem + ".mmps" + tag);
  const fs::path meta_tmp = dir / (stem + ".json" + tag);
  check(mm_state_save(result.state, state_tmp.string().c_str()),
        "caching ground state");
  {
    ordered_json info;
    info["energy"] = result.energy;
    info["converged"] = converged != 0;
    info["jz"] = jz;
    info["dz"] = dz;
    std::ofstream meta(meta_tmp);
    meta << info.dump(2) << "\n";
  }
  std::error_code ec;
  fs::rename(state_tmp, state_path, ec);
  if (!ec) fs::rename(meta_tmp, meta_path, ec);
  result.wall_time = clock.seconds();
  return result;
}

mm_markov_options markov_defaults(long long samples, long long burn_in,
                                  long long thinning, double move_mix,
                                  bool free_moves, unsigned long long seed) {
  mm_markov_options opts;
  mm_markov_options_init(&opts);
  opts.n_samples = samples;
  opts.burn_in = burn_in;
  opts.thinning = thinning;
  opts.move_mix = move_mix;
  opts.u1_moves = free_moves ? 0 : 1;
  opts.seed = seed;
  return opts;
}

void fill_estimate(ResultRow& row, const mm_estimate& est,
                   double scale = 1.0) {
  row.value = est.mean * scale;
  row.std_error = est.std_error * scale;
  row.tau = est.tau;
  row.n_samples = est.n_samples;
}

// ------------------------------------------------------------------- verbs

struct ScanOpts {
  double jz_min = -1.0, jz_max = 3.0;
  int jz_steps = 8;
  double d_min = -1.0, d_max = 3.0;
  int d_steps = 8;
  int n = 32;
  int chi = 16;
  long long samples = 1000;
};

int run_scan(RunContext& ctx, const ScanOpts& o, const ordered_json& config) {
  if (o.jz_steps < 1 || o.d_steps < 1)
    throw CliError("scan: step counts must be at least 1");
  const std::size_t n_cells =
      static_cast<std::size_t>(o.jz_steps) * static_cast<std::size_t>(o.d_steps);
  std::vector<std::vector<ResultRow>> slots(n_cells);
  std::vector<std::function<void()>> cells;
  cells.reserve(n_cells);

  auto grid = [](double lo, double hi, int steps, int k) {
    return steps == 1 ? lo : lo + (hi - lo) * k / (steps - 1);
  };

  for (int i = 0; i < o.jz_steps; ++i)
    for (int j = 0; j < o.d_steps; ++j) {
      const std::size_t idx =
          static_cast<std::size_t>(i) * static_cast<std::size_t>(o.d_steps) +
          static_cast<std::size_t>(j);
      cells.push_back([&, i, j, idx] {
        const double jz = grid(o.jz_min, o.jz_max, o.jz_steps, i);
        const double dz = grid(o.d_min, o.d_max, o.d_steps, j);
        ResultRow base;
        base.experiment = "scan";
        base.params = params_string(jz, dz);
        base.n = o.n;
        base.chi = o.chi;
        std::vector<ResultRow>& rows = slots[idx];

        GroundState gs;
        measure(ctx, rows, base, "dmrg", "energy", ctx.seed, [&](ResultRow& r) {
          gs = ground_state_cached(ctx, o.n, jz, dz, o.chi);
          r.value = gs.energy;
        });
        measure(ctx, rows, base, "sampling", "m1",
                derived_seed(ctx.seed, idx, 1), [&](ResultRow& r) {
                  mm_estimate est;
                  check(mm_sre_sampling(gs.state, 1.0, o.samples, r.seed,
                                        ctx.threads, &est),
                        "perfect sampling");
                  fill_estimate(r, est, 1.0 / o.n);
                });
        measure(ctx, rows, base, "exact", "s_half", ctx.seed,
                [&](ResultRow& r) {
                  check(mm_entanglement_entropy(gs.state, o.n / 2, &r.value),
                        "entanglement entropy");
                });
      });
    }

  run_cells(ctx.threads, cells);
  std::vector<ResultRow> rows;
  for (auto& slot : slots)
    for (auto& r : slot) rows.push_back(std::move(r));
  write_csv(ctx.out_dir / "scan.csv", rows);
  write_manifest(ctx, "scan", config, rows.size(), {});
  return ctx.errors.empty() ? 0 : 2;
}

struct SreOpts {
  ModelChoice model;
  int n = 64;
  std::vector<int> chis = {2, 4, 8, 16, 32};
  long long samples = 10000;
  int chi_p_factor = 2;
};

int run_sre(RunContext& ctx, SreOpts o, const ordered_json& config) {
  resolve_model(o.model);
  std::vector<std::vector<ResultRow>> slots(o.chis.size());
  std::vector<double> weights(o.chis.size(), kNaN);
  std::vector<std::function<void()>> cells;

  for (std::size_t idx = 0; idx < o.chis.size(); ++idx)
    cells.push_back([&, idx] {
      const int chi = o.chis[idx];
      ResultRow base;
      base.experiment = "sre";
      base.params = params_string(o.model.jz, o.model.dz);
      base.n = o.n;
      base.chi = chi;
      std::vector<ResultRow>& rows = slots[idx];

      GroundState gs;
      measure(ctx, rows, base, "dmrg", "energy", ctx.seed, [&](ResultRow& r) {
        gs = ground_state_cached(ctx, o.n, o.model.jz, o.model.dz, chi);
        r.value = gs.energy;
      });
      measure(ctx, rows, base, "sampling", "m1",
              derived_seed(ctx.seed, idx, 1), [&](ResultRow& r) {
                mm_estimate est;
                check(mm_sre_sampling(gs.state, 1.0, o.samples, r.seed,
                                      ctx.threads, &est),
                      "perfect sampling");
                fill_estimate(r, est, 1.0 / o.n);
              });
      measure(ctx, rows, base, "replica", "m2", ctx.seed, [&](ResultRow& r) {
        double value = 0.0, weight = 0.0;
        check(mm_sre_replica(gs.state, 2, o.chi_p_factor * chi, &value,
                             &weight),
              "replica contraction");
        r.value = value / o.n;
        weights[idx] = weight;
      });
      measure(ctx, rows, base, "exact", "s_half", ctx.seed, [&](ResultRow& r) {
        check(mm_entanglement_entropy(gs.state, o.n / 2, &r.value),
              "entanglement entropy");
      });
    });

  run_cells(ctx.threads, cells);
  std::vector<ResultRow> rows;
  for (auto& slot : slots)
    for (auto& r : slot) rows.push_back(std::move(r));

  // 1/chi^2 extrapolation over the chi >= 4 points, matching the way the
  // scaling plots are fitted
  ordered_json extra;
  auto fit_observable = [&](const std::string& observable, bool weighted) {
    std::vector<double> chis, values, errors;
    for (const ResultRow& r : rows)
      if (r.observable == observable && !std::isnan(r.value) && r.chi >= 4) {
        chis.push_back(r.chi);
        values.push_back(r.value);
        errors.push_back(r.std_error);
      }
    ordered_json fit;
    if (chis.size() < 3) {
      fit["skipped"] = "needs at least three chi values >= 4";
      return fit;
    }
    double m0 = 0.0, c = 0.0, m0_err = 0.0, c_err = 0.0, r2 = 0.0;
    const bool use_errors =
        weighted && std::all_of(errors.begin(), errors.end(),
                                [](double e) { return e > 0.0; });
    check(mm_fit_inverse_chi_squared(chis.data(), values.data(),
                                     use_errors ? errors.data() : nullptr,
                                     static_cast<int>(chis.size()), &m0, &c,
                                     &m0_err, &c_err, &r2),
          "fit " + observable);
    fit["m0"] = m0;
    fit["c"] = c;
    fit["m0_err"] = m0_err;
    fit["c_err"] = c_err;
    fit["r_squared"] = r2;
    return fit;
  };
  try {
    extra["m1_fit"] = fit_observable("m1", true);
    extra["m2_fit"] = fit_observable("m2", false);
  } catch (const std::exception& e) {
    ctx.record_error(e.what());
  }
  ordered_json tw = ordered_json::object();
  for (std::size_t k = 0; k < o.chis.size(); ++k)
    if (!std::isnan(weights[k]))
      tw[fmt::format("chi_{}", o.chis[k])] = weights[k];
  extra["replica_truncation_weight"] = tw;

  write_csv(ctx.out_dir / "sre.csv", rows);
  write_manifest(ctx, "sre", config, rows.size(), extra);
  return ctx.errors.empty() ? 0 : 2;
}

struct PartitionOpts {
  ModelChoice model;
  std::vector<int> sizes = {16, 28, 40};
  int chi = 20;
  std::string partition_case = "BC";
  long long samples = 100000;
  long long burn_in = -1;
  long long thinning = -1;
  double move_mix = 0.5;
  bool free_moves = false;
};

int run_mutual_info(RunContext& ctx, PartitionOpts o,
                    const ordered_json& config) {
  resolve_model(o.model);
  std::vector<std::vector<ResultRow>> slots(o.sizes.size());
  std::vector<double> acceptance(o.sizes.size(), kNaN);
  std::vector<std::function<void()>> cells;

  for (std::size_t idx = 0; idx < o.sizes.size(); ++idx)
    cells.push_back([&, idx] {
      const int n = o.sizes[idx];
      const Blocks blocks = case_blocks(n, o.partition_case);
      ResultRow base;
      base.experiment = "mutual-info";
      base.params = params_string(o.model.jz, o.model.dz,
                                  "case=" + o.partition_case);
      base.n = n;
      base.chi = o.chi;
      std::vector<ResultRow>& rows = slots[idx];

      GroundState gs;
      measure(ctx, rows, base, "dmrg", "energy", ctx.seed, [&](ResultRow& r) {
        gs = ground_state_cached(ctx, n, o.model.jz, o.model.dz, o.chi);
        r.value = gs.energy;
      });
      measure(ctx, rows, base, "markov", "i2", derived_seed(ctx.seed, idx, 1),
              [&](ResultRow& r) {
                const mm_markov_options opts = markov_defaults(
                    o.samples, o.burn_in, o.thinning, o.move_mix,
                    o.free_moves, r.seed);
                mm_estimate est;
                check(mm_mutual_info2_markov(gs.state, blocks.a.data(), 1,
                                             blocks.b.data(), 1, &opts, &est,
                                             nullptr, nullptr, nullptr),
                      "mutual information chain");
                fill_estimate(r, est);
                acceptance[idx] = est.acceptance_rate;
              });
      measure(ctx, rows, base, "exact", "i2", ctx.seed, [&](ResultRow& r) {
        check(mm_mutual_info2(gs.state, blocks.a.data(), 1, blocks.b.data(),
                              1, 0, &r.value),
              "swap contraction");
      });
    });

  run_cells(ctx.threads, cells);
  std::vector<ResultRow> rows;
  for (auto& slot : slots)
    for (auto& r : slot) rows.push_back(std::move(r));

  ordered_json extra;
  ordered_json acc = ordered_json::object();
  for (std::size_t k = 0; k < o.sizes.size(); ++k)
    if (!std::isnan(acceptance[k]))
      acc[fmt::format("N_{}", o.sizes[k])] = acceptance[k];
  extra["acceptance_rate"] = acc;

  write_csv(ctx.out_dir / "mutual-info.csv", rows);
  write_manifest(ctx, "mutual-info", config, rows.size(), extra);
  return ctx.errors.empty() ? 0 : 2;
}

struct LrmOpts : PartitionOpts {
  int oracle_chi_p = 0;  // 0: exact replica oracle, >0: compressed
};

int run_lrm(RunContext& ctx, LrmOpts o, const ordered_json& config) {
  resolve_model(o.model);
  std::vector<std::vector<ResultRow>> slots(o.sizes.size());
  std::vector<std::function<void()>> cells;

  for (std::size_t idx = 0; idx < o.sizes.size(); ++idx)
    cells.push_back([&, idx] {
      const int n = o.sizes[idx];
      const Blocks blocks = case_blocks(n, o.partition_case);
      ResultRow base;
      base.experiment = "lrm";
      base.params = params_string(o.model.jz, o.model.dz,
                                  "case=" + o.partition_case);
      base.n = n;
      base.chi = o.chi;
      std::vector<ResultRow>& rows = slots[idx];

      GroundState gs;
      measure(ctx, rows, base, "dmrg", "energy", ctx.seed, [&](ResultRow& r) {
        gs = ground_state_cached(ctx, n, o.model.jz, o.model.dz, o.chi);
        r.value = gs.energy;
      });
      mm_estimate i2{kNaN, 0.0, 0, kNaN, kNaN};
      mm_estimate w{kNaN, 0.0, 0, kNaN, kNaN};
      measure(ctx, rows, base, "markov", "i2", derived_seed(ctx.seed, idx, 1),
              [&](ResultRow& r) {
                const mm_markov_options opts = markov_defaults(
                    o.samples, o.burn_in, o.thinning, o.move_mix,
                    o.free_moves, r.seed);
                check(mm_mutual_info2_markov(gs.state, blocks.a.data(), 1,
                                             blocks.b.data(), 1, &opts, &i2,
                                             nullptr, nullptr, nullptr),
                      "mutual information chain");
                fill_estimate(r, i2);
              });
      measure(ctx, rows, base, "markov", "w", derived_seed(ctx.seed, idx, 2),
              [&](ResultRow& r) {
                const mm_markov_options opts = markov_defaults(
                    o.samples, o.burn_in, o.thinning, o.move_mix,
                    o.free_moves, r.seed);
                check(mm_w_markov(gs.state, blocks.a.data(), 1,
                                  blocks.b.data(), 1, &opts, &w, nullptr,
                                  nullptr, nullptr),
                      "connector chain");
                fill_estimate(r, w);
              });
      measure(ctx, rows, base, "markov", "lrm", derived_seed(ctx.seed, idx, 1),
              [&](ResultRow& r) {
                if (std::isnan(i2.mean) || std::isnan(w.mean))
                  throw CliError("component chains failed");
                r.value = i2.mean - w.mean;
                r.std_error = std::hypot(i2.std_error, w.std_error);
                r.n_samples = o.samples;
              });
      measure(ctx, rows, base, "replica", "lrm", ctx.seed, [&](ResultRow& r) {
        check(mm_long_range_magic_replica(gs.state, blocks.a.data(), 1,
                                          blocks.b.data(), 1, o.oracle_chi_p,
                                          &r.value, nullptr),
              "replica oracle");
      });
    });

  run_cells(ctx.threads, cells);
  std::vector<ResultRow> rows;
  for (auto& slot : slots)
    for (auto& r : slot) rows.push_back(std::move(r));
  write_csv(ctx.out_dir / "lrm.csv", rows);
  write_manifest(ctx, "lrm", config, rows.size(), {});
  return ctx.errors.empty() ? 0 : 2;
}

struct AutocorrOpts : PartitionOpts {
  int rho_max = 0;       // emit rho(t) tables up to this lag
  bool dump_traces = false;
};

int run_autocorr(RunContext& ctx, AutocorrOpts o, const ordered_json& config) {
  resolve_model(o.model);
  std::vector<std::vector<ResultRow>> slots(o.sizes.size());
  std::vector<std::function<void()>> cells;

  auto chain_rows = [&](std::vector<ResultRow>& rows, const ResultRow& base,
                        const GroundState& gs, const Blocks& blocks,
                        const char* name, std::size_t idx,
                        unsigned long long salt, auto&& runner) {
    const std::string tau_name = fmt::format("tau_{}", name);
    measure(ctx, rows, base, "markov", tau_name.c_str(),
            derived_seed(ctx.seed, idx, salt), [&](ResultRow& r) {
              const mm_markov_options opts = markov_defaults(
                  o.samples, o.burn_in, o.thinning, o.move_mix, o.free_moves,
                  r.seed);
              std::vector<long long> steps(
                  static_cast<std::size_t>(o.samples));
              std::vector<double> log_weights(
                  static_cast<std::size_t>(o.samples));
              std::vector<double> observable(
                  static_cast<std::size_t>(o.samples));
              mm_estimate est;
              check(runner(gs.state, blocks, opts, est, steps.data(),
                           log_weights.data(), observable.data()),
                    fmt::format("{} chain", name));
              r.value = est.tau;
              r.n_samples = est.n_samples;

              if (o.rho_max > 0) {
                const int t_max = static_cast<int>(
                    std::min<long long>(o.rho_max, o.samples - 1));
                std::vector<double> rho(static_cast<std::size_t>(t_max) + 1);
                check(mm_autocorr_function(observable.data(), o.samples,
                                           t_max, rho.data()),
                      "autocorrelation table");
                std::ofstream out(ctx.out_dir /
                                  fmt::format("rho_{}_N{}.csv", name, base.n));
                out << "t,rho\n";
                for (int t = 0; t <= t_max; ++t)
                  out << fmt::format("{},{:.12g}\n", t,
                                     rho[static_cast<std::size_t>(t)]);
              }
              if (o.dump_traces) {
                std::ofstream out(
                    ctx.out_dir /
                    fmt::format("trace_{}_N{}.csv", name, base.n));
                out << "step,log_weight,observable\n";
                for (long long k = 0; k < o.samples; ++k)
                  out << fmt::format(
                      "{},{:.12g},{:.12g}\n",
                      steps[static_cast<std::size_t>(k)],
                      log_weights[static_cast<std::size_t>(k)],
                      observable[static_cast<std::size_t>(k)]);
              }
            });
  };

  for (std::size_t idx = 0; idx < o.sizes.size(); ++idx)
    cells.push_back([&, idx] {
      const int n = o.sizes[idx];
      const Blocks blocks = case_blocks(n, o.partition_case);
      ResultRow base;
      base.experiment = "autocorr";
      base.params = params_string(o.model.jz, o.model.dz,
                                  "case=" + o.partition_case);
      base.n = n;
      base.chi = o.chi;
      std::vector<ResultRow>& rows = slots[idx];

      GroundState gs;
      measure(ctx, rows, base, "dmrg", "energy", ctx.seed, [&](ResultRow& r) {
        gs = ground_state_cached(ctx, n, o.model.jz, o.model.dz, o.chi);
        r.value = gs.energy;
      });
      chain_rows(rows, base, gs, blocks, "i2", idx, 1,
                 [](const mm_state* s, const Blocks& bl,
                    const mm_markov_options& opts, mm_estimate& est,
                    long long* st, double* lw, double* ob) {
                   return mm_mutual_info2_markov(s, bl.a.data(), 1,
                                                 bl.b.data(), 1, &opts, &est,
                                                 st, lw, ob);
                 });
      chain_rows(rows, base, gs, blocks, "w", idx, 2,
                 [](const mm_state* s, const Blocks& bl,
                    const mm_markov_options& opts, mm_estimate& est,
                    long long* st, double* lw, double* ob) {
                   return mm_w_markov(s, bl.a.data(), 1, bl.b.data(), 1,
                                      &opts, &est, st, lw, ob);
                 });
    });

  run_cells(ctx.threads, cells);
  std::vector<ResultRow> rows;
  for (auto& slot : slots)
    for (auto& r : slot) rows.push_back(std::move(r));
  write_csv(ctx.out_dir / "autocorr.csv", rows);
  write_manifest(ctx, "autocorr", config, rows.size(), {});
  return ctx.errors.empty() ? 0 : 2;
}

struct CheckOpts {
  int n = 4;
  int chi = 4;
  int fixtures = 5;
  long long samples = 10000;
  // ~25 simultaneous checks: a 4 sigma band keeps the family-wise false-alarm
  // rate around 0.2% while still catching any real estimator bias
  double sigma = 4.0;
};

int run_check(RunContext& ctx, const CheckOpts& o, const ordered_json& config) {
  std::vector<ResultRow> rows;
  ordered_json checks = ordered_json::array();
  bool all_pass = true;

  auto record = [&](const std::string& name, double delta, double tolerance) {
    const bool pass = std::isfinite(delta) && std::abs(delta) < tolerance;
    ordered_json entry;
    entry["name"] = name;
    entry["delta"] = delta;
    entry["tolerance"] = tolerance;
    entry["pass"] = pass;
    checks.push_back(entry);
    all_pass = all_pass && pass;
  };

  for (int f = 0; f < o.fixtures; ++f) {
    const unsigned long long fixture_seed = ctx.seed + 100ULL * f;
    StateHandle st;
    check(mm_state_random(o.n, 3, o.chi, fixture_seed, st.out()),
          "random fixture");
    ResultRow base;
    base.experiment = "check";
    base.params = fmt::format("random;fixture={}", f);
    base.n = o.n;
    base.chi = o.chi;

    double brute1 = kNaN, brute2 = kNaN;
    measure(ctx, rows, base, "brute", "m1_total", fixture_seed,
            [&](ResultRow& r) {
              check(mm_sre_brute_force(st, 1.0, &r.value), "dense m1");
              brute1 = r.value;
            });
    measure(ctx, rows, base, "brute", "m2_total", fixture_seed,
            [&](ResultRow& r) {
              check(mm_sre_brute_force(st, 2.0, &r.value), "dense m2");
              brute2 = r.value;
            });
    measure(ctx, rows, base, "replica", "m2_total", fixture_seed,
            [&](ResultRow& r) {
              check(mm_sre_replica(st, 2, 0, &r.value, nullptr), "replica");
              record(fmt::format("fixture{}:replica_vs_brute", f),
                     r.value - brute2, 1e-9);
            });
    measure(ctx, rows, base, "sampling", "m1_total",
            fixture_seed + 1, [&](ResultRow& r) {
              mm_estimate est;
              check(mm_sre_sampling(st, 1.0, o.samples, r.seed, ctx.threads,
                                    &est),
                    "perfect sampling");
              fill_estimate(r, est);
              record(fmt::format("fixture{}:sampling_vs_brute", f),
                     est.mean - brute1,
                     o.sigma * std::max(est.std_error, 1e-12));
            });
    measure(ctx, rows, base, "markov", "m2_total", fixture_seed + 2,
            [&](ResultRow& r) {
              mm_markov_options opts = markov_defaults(o.samples, -1, -1, 0.5,
                                                       true, r.seed);
              mm_estimate est;
              check(mm_sre_markov(st, 2.0, &opts, &est, nullptr, nullptr,
                                  nullptr),
                    "markov");
              fill_estimate(r, est);
              record(fmt::format("fixture{}:markov_vs_brute", f),
                     est.mean - brute2,
                     o.sigma * std::max(est.std_error, 1e-12));
            });

    const int blocks_a[] = {0, o.n / 2};
    const int blocks_b[] = {o.n / 2, o.n};
    double exact_i2 = kNaN;
    measure(ctx, rows, base, "exact", "i2", fixture_seed, [&](ResultRow& r) {
      check(mm_mutual_info2(st, blocks_a, 1, blocks_b, 1, 0, &r.value),
            "swap contraction");
      exact_i2 = r.value;
    });
    measure(ctx, rows, base, "markov", "i2", fixture_seed + 3,
            [&](ResultRow& r) {
              mm_markov_options opts = markov_defaults(o.samples, -1, -1, 0.5,
                                                       true, r.seed);
              mm_estimate est;
              check(mm_mutual_info2_markov(st, blocks_a, 1, blocks_b, 1,
                                           &opts, &est, nullptr, nullptr,
                                           nullptr),
                    "markov mutual information");
              fill_estimate(r, est);
              record(fmt::format("fixture{}:markov_i2_vs_exact", f),
                     est.mean - exact_i2,
                     o.sigma * std::max(est.std_error, 1e-12));
            });

    const int lrm_a[] = {0, 1};
    const int lrm_b[] = {o.n - 1, o.n};
    double brute_lrm = kNaN;
    measure(ctx, rows, base, "brute", "lrm", fixture_seed, [&](ResultRow& r) {
      check(mm_long_range_magic_brute_force(st, lrm_a, 1, lrm_b, 1, &r.value),
            "dense long-range magic");
      brute_lrm = r.value;
    });
    measure(ctx, rows, base, "replica", "lrm", fixture_seed,
            [&](ResultRow& r) {
              check(mm_long_range_magic_replica(st, lrm_a, 1, lrm_b, 1, 0,
                                                &r.value, nullptr),
                    "replica long-range magic");
              record(fmt::format("fixture{}:lrm_replica_vs_brute", f),
                     r.value - brute_lrm, 1e-9);
            });
  }

  ordered_json extra;
  extra["checks"] = checks;
  extra["all_pass"] = all_pass;
  write_csv(ctx.out_dir / "check.csv", rows);
  write_manifest(ctx, "check", config, rows.size(), extra);
  if (!all_pass || !ctx.errors.empty()) {
    ordered_json report;
    report["error"] = "cross-method check failed";
    report["failed"] = ordered_json::array();
    for (const auto& c : checks)
      if (!c["pass"].get<bool>()) report["failed"].push_back(c);
    fmt::print(stderr, "{}\n", report.dump());
    return 1;
  }
  return 0;
}

// --------------------------------------------------------------------- plot

struct PlotOpts {
  std::string input;
  std::string output;
  std::string x = "N";
  std::string y = "value";
  std::string yerr = "std_error";
  std::string group;
  std::string filter;  // column=value, may repeat separated by ';'
  std::string title;
  bool logx = false;
  bool logy = false;
};

struct Series {
  std::string label;
  std::vector<std::array<double, 3>> points;  // x, y, yerr
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

std::vector<Series> read_series(const PlotOpts& o) {
  std::ifstream in(o.input);
  if (!in) throw CliError(fmt::format("cannot open '{}'", o.input));
  std::string line;
  if (!std::getline(in, line)) throw CliError("empty input");
  const std::vector<std::string> header = split(line, ',');
  auto column = [&](const std::string& name, bool required) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required)
        throw CliError(fmt::format("no column '{}' in '{}'", name, o.input));
      return -1L;
    }
    return it - header.begin();
  };
  const long cx = column(o.x, true);
  const long cy = column(o.y, true);
  const long ce = o.yerr.empty() ? -1 : column(o.yerr, false);
  const long cg = o.group.empty() ? -1 : column(o.group, true);

  std::vector<std::pair<long, std::string>> filters;
  for (const std::string& clause : split(o.filter, ';')) {
    if (clause.empty()) continue;
    const auto eq = clause.find('=');
    if (eq == std::string::npos)
      throw CliError(fmt::format("bad filter clause '{}'", clause));
    filters.emplace_back(column(clause.substr(0, eq), true),
                         clause.substr(eq + 1));
  }

  std::vector<Series> series;
  auto series_for = [&](const std::string& label) -> Series& {
    for (Series& s : series)
      if (s.label == label) return s;
    series.push_back({label, {}});
    return series.back();
  };

  auto parse = [](const std::string& field, double& out) {
    if (field.empty()) return false;
    try {
      std::size_t used = 0;
      out = std::stod(field, &used);
      return used == field.size();
    } catch (...) {
      return false;
    }
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() < header.size()) continue;
    bool keep = true;
    for (const auto& [col, value] : filters)
      keep = keep && fields[static_cast<std::size_t>(col)] == value;
    if (!keep) continue;
    double x = 0.0, y = 0.0, err = 0.0;
    if (!parse(fields[static_cast<std::size_t>(cx)], x)) continue;
    if (!parse(fields[static_cast<std::size_t>(cy)], y)) continue;
    if (ce >= 0) parse(fields[static_cast<std::size_t>(ce)], err);
    const std::string label =
        cg >= 0 ? fields[static_cast<std::size_t>(cg)] : o.y;
    series_for(label).points.push_back({x, y, err});
  }
  for (Series& s : series)
    std::sort(s.points.begin(), s.points.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
  series.erase(std::remove_if(series.begin(), series.end(),
                              [](const Series& s) { return s.points.empty(); }),
               series.end());
  if (series.empty()) throw CliError("no plottable points after filtering");
  return series;
}

std::vector<double> nice_ticks(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / 4.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double residual = raw / mag;
  const double step = residual < 1.5   ? mag
                      : residual < 3.5 ? 2.0 * mag
                      : residual < 7.5 ? 5.0 * mag
                                       : 10.0 * mag;
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step;
       t += step)
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return ticks;
}

int run_plot(RunContext& ctx, PlotOpts o) {
  (void)ctx;
  std::vector<Series> series = read_series(o);
  auto transform = [](bool log_scale, double v) {
    if (!log_scale) return v;
    if (v <= 0.0)
      throw CliError("log axis requested but the data contain values <= 0");
    return std::log10(v);
  };
  for (Series& s : series)
    for (auto& p : s.points) {
      if (o.logy && p[2] > 0.0) {
        const double hi = std::log10(p[1] + p[2]);
        const double low = p[1] - p[2] > 0.0
                               ? std::log10(p[1] - p[2])
                               : std::log10(p[1]) - (hi - std::log10(p[1]));
        p[2] = 0.5 * (hi - low);
      }
      p[0] = transform(o.logx, p[0]);
      p[1] = transform(o.logy, p[1]);
    }

  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const Series& s : series)
    for (const auto& p : s.points) {
      x_lo = std::min(x_lo, p[0]);
      x_hi = std::max(x_hi, p[0]);
      y_lo = std::min(y_lo, p[1] - p[2]);
      y_hi = std::max(y_hi, p[1] + p[2]);
    }
  const double x_pad = (x_hi - x_lo) * 0.06 + 1e-12;
  const double y_pad = (y_hi - y_lo) * 0.08 + 1e-12;
  x_lo -= x_pad;
  x_hi += x_pad;
  y_lo -= y_pad;
  y_hi += y_pad;

  const double width = 720, height = 520;
  const double left = 80, right = 24, top = 46, bottom = 58;
  auto sx = [&](double x) {
    return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right);
  };
  auto sy = [&](double y) {
    return height - bottom -
           (y - y_lo) / (y_hi - y_lo) * (height - top - bottom);
  };
  auto tick_label = [&](bool log_scale, double v) {
    return fmt::format("{:.4g}", log_scale ? std::pow(10.0, v) : v);
  };
  const std::array<const char*, 6> palette = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#17becf"};

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"13\">\n",
      width, height, width, height);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (double t : nice_ticks(x_lo + x_pad, x_hi - x_pad)) {
    const double px = sx(t);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" "
        "stroke=\"#dddddd\"/>\n",
        px, top, height - bottom);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
        px, height - bottom + 20, tick_label(o.logx, t));
  }
  for (double t : nice_ticks(y_lo + y_pad, y_hi - y_pad)) {
    const double py = sy(t);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"#dddddd\"/>\n",
        left, py, width - right);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n",
        left - 8, py + 4, tick_label(o.logy, t));
  }
  svg += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      left, top, width - left - right, height - top - bottom);
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
      left + (width - left - right) / 2, height - 12, o.x);
  svg += fmt::format(
      "<text x=\"18\" y=\"{:.1f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 {:.1f})\">{}</text>\n",
      top + (height - top - bottom) / 2, top + (height - top - bottom) / 2,
      o.y);
  if (!o.title.empty())
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"26\" text-anchor=\"middle\" "
        "font-size=\"16\">{}</text>\n",
        left + (width - left - right) / 2, o.title);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % palette.size()];
    std::string poly;
    for (const auto& p : series[s].points)
      poly += fmt::format("{:.1f},{:.1f} ", sx(p[0]), sy(p[1]));
    svg += fmt::format(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" "
        "stroke-width=\"1.5\"/>\n",
        poly, color);
    for (const auto& p : series[s].points) {
      if (p[2] > 0.0)
        svg += fmt::format(
            "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" "
            "y2=\"{2:.1f}\" stroke=\"{3}\"/>\n",
            sx(p[0]), sy(p[1] - p[2]), sy(p[1] + p[2]), color);
      svg += fmt::format(
          "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n",
          sx(p[0]), sy(p[1]), color);
    }
    svg += fmt::format(
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"10\" height=\"10\" "
        "fill=\"{}\"/>\n",
        width - right - 150, top + 10 + 18.0 * s, color);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
                       width - right - 135, top + 19 + 18.0 * s,
                       series[s].label);
  }
  svg += "</svg>\n";

  const std::string out_path =
      o.output.empty() ? fs::path(o.input).replace_extension(".svg").string()
                       : o.output;
  std::ofstream out(out_path);
  if (!out) throw CliError(fmt::format("cannot write '{}'", out_path));
  out << svg;
  return 0;
}

// ---------------------------------------------------------------------- main

ordered_json echo_config(const CLI::App* sub) {
  ordered_json out;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_lnames().empty()
                                 ? opt->get_name()
                                 : opt->get_lnames().front();
    if (name == "help") continue;
    const auto results = opt->results();
    if (results.empty()) continue;
    if (results.size() == 1)
      out[name] = results.front();
    else
      out[name] = results;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Magic and entanglement experiments on spin-1 chain ground states"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI configuration; sections [scan], [sre], ... hold the "
                 "per-verb options");

  RunContext ctx;
  std::string out_dir = "out";
  app.add_option("--out", out_dir, "output directory")
      ->capture_default_str()
      ->configurable();
  app.add_option("--threads", ctx.threads,
                 "worker threads for independent cells")
      ->capture_default_str()
      ->configurable();
  app.add_option("--seed", ctx.seed, "base random seed")
      ->capture_default_str()
      ->configurable();

  auto add_model = [](CLI::App* sub, ModelChoice& model) {
    sub->add_option("--preset", model.preset,
                    "critical-point preset (large-d-xy, haldane-large-d, "
                    "haldane-neel); overrides --jz/--d")
        ->configurable();
    sub->add_option("--jz", model.jz, "easy-axis coupling")
        ->capture_default_str()
        ->configurable();
    sub->add_option("--d", model.dz, "single-ion anisotropy")
        ->capture_default_str()
        ->configurable();
  };
  auto add_markov = [](CLI::App* sub, PartitionOpts& o) {
    sub->add_option("--sizes", o.sizes, "chain sizes")
        ->delimiter(',')
        ->capture_default_str()
        ->configurable();
    sub->add_option("--chi", o.chi, "DMRG bond dimension")
        ->capture_default_str()
        ->configurable();
    sub->add_option("--case", o.partition_case,
                    "partition pair: BC (connected), AC or AD (disconnected)")
        ->check(CLI::IsMember({"BC", "AC", "AD"}))
        ->capture_default_str()
        ->configurable();
    sub->add_option("--samples", o.samples, "recorded samples per chain")
        ->capture_default_str()
        ->configurable();
    sub->add_option("--burn-in", o.burn_in, "burn-in steps (-1: 10 N)")
        ->capture_default_str()
        ->configurable();
    sub->add_option("--thinning", o.thinning,
                    "steps between records (-1: N)")
        ->capture_default_str()
        ->configurable();
    sub->add_option("--move-mix", o.move_mix,
                    "probability of a phase move vs a shift move")
        ->capture_default_str()
        ->configurable();
    sub->add_flag("--free-shift-moves", o.free_moves,
                  "single-site shift proposals instead of charge-conserving "
                  "pairs (needed for states without the U(1) symmetry)")
        ->configurable();
  };

  ScanOpts scan;
  CLI::App* scan_cmd =
      app.add_subcommand("scan", "magic density over a (Jz, D) grid");
  scan_cmd->add_option("--jz-min", scan.jz_min)->capture_default_str()->configurable();
  scan_cmd->add_option("--jz-max", scan.jz_max)->capture_default_str()->configurable();
  scan_cmd->add_option("--jz-steps", scan.jz_steps)->capture_default_str()->configurable();
  scan_cmd->add_option("--d-min", scan.d_min)->capture_default_str()->configurable();
  scan_cmd->add_option("--d-max", scan.d_max)->capture_default_str()->configurable();
  scan_cmd->add_option("--d-steps", scan.d_steps)->capture_default_str()->configurable();
  scan_cmd->add_option("--size", scan.n, "chain size")->capture_default_str()->configurable();
  scan_cmd->add_option("--chi", scan.chi)->capture_default_str()->configurable();
  scan_cmd->add_option("--samples", scan.samples)->capture_default_str()->configurable();

  SreOpts sre;
  CLI::App* sre_cmd = app.add_subcommand(
      "sre", "full-state magic and entanglement against bond dimension");
  add_model(sre_cmd, sre.model);
  sre_cmd->add_option("--size", sre.n, "chain size")->capture_default_str()->configurable();
  sre_cmd->add_option("--chis", sre.chis, "bond dimensions")
      ->delimiter(',')
      ->capture_default_str()
      ->configurable();
  sre_cmd->add_option("--samples", sre.samples)->capture_default_str()->configurable();
  sre_cmd->add_option("--chi-p-factor", sre.chi_p_factor,
                      "operator-basis bond = factor * chi")
      ->capture_default_str()
      ->configurable();

  PartitionOpts mi;
  CLI::App* mi_cmd = app.add_subcommand(
      "mutual-info", "Renyi-2 mutual information between two blocks");
  add_model(mi_cmd, mi.model);
  add_markov(mi_cmd, mi);

  LrmOpts lrm;
  CLI::App* lrm_cmd =
      app.add_subcommand("lrm", "long-range magic between two blocks");
  add_model(lrm_cmd, lrm.model);
  add_markov(lrm_cmd, lrm);
  lrm_cmd->add_option("--oracle-chi-p", lrm.oracle_chi_p,
                      "replica oracle bond (0: exact contraction)")
      ->capture_default_str()
      ->configurable();

  AutocorrOpts ac;
  CLI::App* ac_cmd = app.add_subcommand(
      "autocorr", "integrated autocorrelation times of the sampling chains");
  add_model(ac_cmd, ac.model);
  add_markov(ac_cmd, ac);
  ac_cmd->add_option("--rho-max", ac.rho_max,
                     "emit rho(t) tables up to this lag (0: off)")
      ->capture_default_str()
      ->configurable();
  ac_cmd->add_flag("--dump-traces", ac.dump_traces,
                   "write step/log-weight/observable chain records")
      ->configurable();

  CheckOpts chk;
  CLI::App* chk_cmd = app.add_subcommand(
      "check", "cross-method oracle consistency on random fixtures");
  chk_cmd->add_option("--size", chk.n)->capture_default_str()->configurable();
  chk_cmd->add_option("--chi", chk.chi)->capture_default_str()->configurable();
  chk_cmd->add_option("--fixtures", chk.fixtures)->capture_default_str()->configurable();
  chk_cmd->add_option("--samples", chk.samples)->capture_default_str()->configurable();
  chk_cmd->add_option("--sigma", chk.sigma, "statistical tolerance band")
      ->capture_default_str()
      ->configurable();

  PlotOpts plot;
  CLI::App* plot_cmd =
      app.add_subcommand("plot", "render a result CSV as an SVG figure");
  plot_cmd->add_option("--input", plot.input, "CSV produced by another verb")
      ->required()
      ->configurable();
  plot_cmd->add_option("--output", plot.output, "SVG path (default: input with .svg)")
      ->configurable();
  plot_cmd->add_option("-x", plot.x, "x column")->capture_default_str()->configurable();
  plot_cmd->add_option("-y", plot.y, "y column")->capture_default_str()->configurable();
  plot_cmd->add_option("--yerr", plot.yerr, "error-bar column ('' to disable)")
      ->capture_default_str()
      ->configurable();
  plot_cmd->add_option("--group", plot.group, "one line per value of this column")
      ->configurable();
  plot_cmd->add_option("--filter", plot.filter,
                       "keep rows matching column=value;column=value ...")
      ->configurable();
  plot_cmd->add_option("--title", plot.title)->configurable();
  plot_cmd->add_flag("--logx", plot.logx)->configurable();
  plot_cmd->add_flag("--logy", plot.logy)->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    ordered_json report;
    report["error"] = e.what();
    fmt::print(stderr, "{}\n", report.dump());
    return app.exit(e, std::cerr, std::cerr);
  }

  ctx.out_dir = out_dir;
  if (const CLI::Option* cfg = app.get_config_ptr(); cfg && cfg->count() > 0)
    ctx.config_path = cfg->results().front();

  try {
    fs::create_directories(ctx.out_dir);
    CLI::App* sub = app.get_subcommands().front();
    const ordered_json config = echo_config(sub);
    if (sub == scan_cmd) return run_scan(ctx, scan, config);
    if (sub == sre_cmd) return run_sre(ctx, sre, config);
    if (sub == mi_cmd) return run_mutual_info(ctx, mi, config);
    if (sub == lrm_cmd) return run_lrm(ctx, lrm, config);
    if (sub == ac_cmd) return run_autocorr(ctx, ac, config);
    if (sub == chk_cmd) return run_check(ctx, chk, config);
    if (sub == plot_cmd) return run_plot(ctx, plot);
    throw CliError("no verb selected");
  } catch (const std::exception& e) {
    ordered_json report;
    report["error"] = e.what();
    report["experiment"] = app.get_subcommands().empty()
                               ? ""
                               : app.get_subcommands().front()->get_name();
    fmt::print(stderr, "{}\n", report.dump());
    return 1;
  }
}

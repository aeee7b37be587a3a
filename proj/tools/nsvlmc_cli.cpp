// nsvlmc command-line driver: dataset generation, training runs with seed
// repeats, prediction from checkpoints, evaluation, and POD utilities.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nsvlmc/checkpoint.hpp"
#include "nsvlmc/data.hpp"
#include "nsvlmc/model.hpp"
#include "nsvlmc/pod.hpp"
#include "nsvlmc/predict.hpp"
#include "nsvlmc/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nsvlmc;

namespace {

// ---------------------------------------------------------------------------
// Run configuration: per-case defaults, JSON config file, flag overrides.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string case_name = "toy";  // toy|jura|eeg|sarcos_a|sarcos_b|sarcos_c|file
  std::string data_path;          // dataset CSV; empty = data/<case>.csv
  std::string test_path;          // optional held-out CSV for case=file
  std::string variant = "nsvlmc";
  // -1 = take the per-case default below
  long q = -1, h = -1, m = -1, iters = -1, minibatch = -1, s = -1;
  double lr = -1.0, length_scale = -1.0, noise_var = 1e-2;
  std::string variance_mode = "exact-cross";
  std::string activation = "tanh";
  long n_pred_samples = 100;
  long n_repeats = 10;
  long trace_every = 50;
  std::uint64_t seed = 0;
  std::uint64_t toy_seed = 0;
  std::string out_dir = "run";
};

struct CaseDefaults {
  long q, h, m, iters, minibatch;
  double ls;
};

// Per-case settings: Q/H/M, iteration budget, minibatch, length-scale init.
// The large named cases are capped at M=100 inducing points per latent so a
// full repeat sweep stays tractable on a single core; pass --m to override.
CaseDefaults case_defaults(const std::string& name) {
  if (name == "toy") return {2, 100, 25, 20000, 0, 0.1};
  if (name == "jura") return {2, 20, 100, 10000, 32, 0.1};
  if (name == "eeg") return {4, 20, 100, 10000, 64, 0.1};
  if (name == "sarcos_a") return {2, 10, 100, 20000, 32, 0.5};
  if (name == "sarcos_b") return {2, 10, 100, 20000, 32, 0.5};
  if (name == "sarcos_c") return {2, 100, 100, 20000, 32, 0.5};
  if (name == "file") return {2, 20, 0, 10000, 32, 0.1};
  throw InvalidSpec("unknown case: " + name);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("config file not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InvalidSpec(std::string("config parse error: ") + e.what());
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("case", cfg.case_name);
  get("data", cfg.data_path);
  get("test", cfg.test_path);
  get("variant", cfg.variant);
  get("q", cfg.q);
  get("h", cfg.h);
  get("m", cfg.m);
  get("iters", cfg.iters);
  get("minibatch", cfg.minibatch);
  get("s", cfg.s);
  get("lr", cfg.lr);
  get("length_scale", cfg.length_scale);
  get("noise_var", cfg.noise_var);
  get("variance_mode", cfg.variance_mode);
  get("activation", cfg.activation);
  get("pred_samples", cfg.n_pred_samples);
  get("repeats", cfg.n_repeats);
  get("trace_every", cfg.trace_every);
  get("seed", cfg.seed);
  get("toy_seed", cfg.toy_seed);
  get("out", cfg.out_dir);
}

struct Resolved {
  RunConfig cfg;  // all defaults materialized
  ModelSpec spec;
  TrainConfig train;
};

Resolved resolve(RunConfig cfg) {
  const CaseDefaults d = case_defaults(cfg.case_name);
  if (cfg.q < 0) cfg.q = d.q;
  if (cfg.h < 0) cfg.h = d.h;
  if (cfg.m < 0) cfg.m = d.m;
  if (cfg.iters < 0) cfg.iters = d.iters;
  if (cfg.minibatch < 0) cfg.minibatch = d.minibatch;
  if (cfg.s < 0) cfg.s = 10;
  if (cfg.lr < 0) cfg.lr = 5e-3;
  if (cfg.length_scale < 0) cfg.length_scale = d.ls;
  if (cfg.data_path.empty() && cfg.case_name != "toy" && cfg.case_name != "file") {
    const std::string base =
        cfg.case_name.rfind("sarcos", 0) == 0 ? "sarcos" : cfg.case_name;
    cfg.data_path = "data/" + base + ".csv";
  }
  if (cfg.n_repeats < 1) throw InvalidSpec("repeats must be >= 1");
  if (cfg.n_pred_samples < 2) throw InvalidSpec("pred-samples must be >= 2");

  Resolved r;
  r.cfg = cfg;
  r.spec.variant = parse_variant(cfg.variant);
  r.spec.q = cfg.q;
  r.spec.h = cfg.h;
  r.spec.m_per_latent = cfg.m;
  r.spec.length_scale_init = cfg.length_scale;
  r.spec.noise_var_init = cfg.noise_var;
  if (cfg.activation == "tanh") r.spec.activation = Activation::tanh;
  else if (cfg.activation == "relu") r.spec.activation = Activation::relu;
  else throw InvalidSpec("unknown activation: " + cfg.activation);
  if (cfg.variance_mode == "exact-cross")
    r.spec.variance_mode = VarianceTermMode::exact_cross;
  else if (cfg.variance_mode == "paper-literal")
    r.spec.variance_mode = VarianceTermMode::paper_literal;
  else throw InvalidSpec("unknown variance mode: " + cfg.variance_mode);

  r.train.iters = int(cfg.iters);
  r.train.lr = cfg.lr;
  r.train.elbo.s = int(cfg.s);
  r.train.elbo.minibatch = Index(cfg.minibatch);
  r.train.trace_every = int(cfg.trace_every);
  return r;
}

json config_to_json(const RunConfig& c) {
  return json{{"case", c.case_name},     {"data", c.data_path},
              {"test", c.test_path},     {"variant", c.variant},
              {"q", c.q},                {"h", c.h},
              {"m", c.m},                {"iters", c.iters},
              {"minibatch", c.minibatch},{"s", c.s},
              {"lr", c.lr},              {"length_scale", c.length_scale},
              {"noise_var", c.noise_var},{"variance_mode", c.variance_mode},
              {"activation", c.activation},
              {"pred_samples", c.n_pred_samples},
              {"repeats", c.n_repeats},  {"trace_every", c.trace_every},
              {"seed", c.seed},          {"toy_seed", c.toy_seed},
              {"out", c.out_dir}};
}

// ---------------------------------------------------------------------------
// Dataset assembly.
// ---------------------------------------------------------------------------

// Held-out toy evaluation: an independent draw of the same generator,
// restricted per task to the input range seen in training so sparse tasks are
// not scored on extrapolation.
Split make_toy_split(std::uint64_t toy_seed) {
  Split split;
  split.train = gen_toy(toy_seed).data;
  const MultiTaskDataset fresh = gen_toy(toy_seed + 1000000007ULL).data;
  for (size_t c = 0; c < fresh.tasks.size(); ++c) {
    const double lo = split.train.tasks[c].x.col(0).minCoeff();
    const double hi = split.train.tasks[c].x.col(0).maxCoeff();
    std::vector<Index> keep;
    for (Index i = 0; i < fresh.tasks[c].x.rows(); ++i)
      if (fresh.tasks[c].x(i, 0) >= lo && fresh.tasks[c].x(i, 0) <= hi)
        keep.push_back(i);
    TaskBlock b;
    b.x = Mat(Index(keep.size()), 1);
    b.y = Vec(Index(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) {
      b.x.row(Index(i)) = fresh.tasks[c].x.row(keep[i]);
      b.y[Index(i)] = fresh.tasks[c].y[keep[i]];
    }
    split.test.push_back(std::move(b));
  }
  return split;
}

Split load_case(const RunConfig& cfg) {
  if (cfg.case_name == "toy") return make_toy_split(cfg.toy_seed);
  if (cfg.case_name == "file") {
    Split split;
    split.train = load_canonical_csv(cfg.data_path);
    split.test.resize(size_t(split.train.num_tasks()));
    if (!cfg.test_path.empty()) {
      const MultiTaskDataset t = load_canonical_csv(cfg.test_path);
      if (t.num_tasks() != split.train.num_tasks())
        throw SchemaMismatch("test CSV task count differs from training CSV");
      for (Index c = 0; c < t.num_tasks(); ++c)
        split.test[size_t(c)] = t.tasks[size_t(c)];
    }
    return split;
  }
  return load_split(parse_split_name(cfg.case_name), cfg.data_path);
}

// ---------------------------------------------------------------------------
// Small deterministic writers.
// ---------------------------------------------------------------------------

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot open for writing: " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_matrix_csv(const fs::path& path, const Mat& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("file not found: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw SchemaMismatch(path + ": non-numeric cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw SchemaMismatch(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaMismatch(path + ": empty matrix");
  Mat m(Index(rows.size()), Index(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[size_t(i)][size_t(j)];
  return m;
}

// Inputs-only CSV with header x_0,...,x_{D-1}.
Mat read_inputs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("file not found: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("x_0", 0) != 0)
    throw SchemaMismatch(path + ": expected header starting with x_0");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaMismatch(path + ": no input rows");
  Mat m(Index(rows.size()), Index(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[size_t(i)][size_t(j)];
  return m;
}

void write_prediction_csv(const fs::path& path, const Mat& x,
                          const PredictiveSummary& pred) {
  auto out = open_out(path);
  for (Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << "x_" << j;
  for (Index c = 0; c < pred.mean.cols(); ++c)
    out << ",mean_" << c << ",lo_" << c << ",hi_" << c;
  out << "\n";
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << x(i, j);
    for (Index c = 0; c < pred.mean.cols(); ++c) {
      const double half = 1.96 * std::sqrt(pred.var(i, c));
      out << "," << pred.mean(i, c) << "," << pred.mean(i, c) - half << ","
          << pred.mean(i, c) + half;
    }
    out << "\n";
  }
}

json metrics_to_json(const Metrics& m) {
  json per = json::array();
  for (const auto& t : m.per_task)
    per.push_back({{"n", t.n}, {"mae", t.mae}, {"smse", t.smse}, {"nll", t.nll}});
  return json{{"per_task", per},
              {"overall",
               {{"n", m.overall.n},
                {"mae", m.overall.mae},
                {"smse", m.overall.smse},
                {"nll", m.overall.nll}}}};
}

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

MeanStd aggregate(const std::vector<double>& xs) {
  MeanStd out;
  const double n = double(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / (n - 1.0));  // unbiased sample std across seeds
  }
  return out;
}

json aggregate_to_json(const std::vector<json>& per_seed) {
  auto field = [&](auto select) {
    std::vector<double> xs;
    for (const auto& j : per_seed) xs.push_back(select(j));
    const MeanStd ms = aggregate(xs);
    return json{{"mean", ms.mean}, {"std", ms.std}};
  };
  json out;
  for (const char* key : {"mae", "smse", "nll"}) {
    out["overall"][key] =
        field([&](const json& j) { return j.at("overall").at(key).get<double>(); });
  }
  const size_t n_tasks = per_seed.front().at("per_task").size();
  out["per_task"] = json::array();
  for (size_t c = 0; c < n_tasks; ++c) {
    json t;
    t["n"] = per_seed.front().at("per_task")[c].at("n");
    if (t["n"].get<long>() > 0)
      for (const char* key : {"mae", "smse", "nll"})
        t[key] = field([&](const json& j) {
          return j.at("per_task")[c].at(key).get<double>();
        });
    out["per_task"].push_back(t);
  }
  return out;
}

void print_aggregate(const json& agg, size_t n_seeds) {
  std::cout << std::setprecision(4);
  std::cout << "aggregated over " << n_seeds << " seeds (mean +- std)\n";
  for (const char* key : {"mae", "smse", "nll"}) {
    const auto& f = agg.at("overall").at(key);
    std::cout << "  " << key << ": " << f.at("mean").get<double>() << " +- "
              << f.at("std").get<double>() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Subcommand bodies.
// ---------------------------------------------------------------------------

int run_train(const RunConfig& raw_cfg) {
  const Resolved r = resolve(raw_cfg);
  const RunConfig& cfg = r.cfg;

  const Split split = load_case(cfg);
  const MultiTaskDataset norm_data = normalize(split.train);
  bool has_test = false;
  for (const auto& t : split.test) has_test |= t.y.size() > 0;

  fs::create_directories(cfg.out_dir);
  json resolved_json = config_to_json(cfg);
  write_json(fs::path(cfg.out_dir) / "config.json", resolved_json);

  // 1-D prediction-curve grid spanning the pooled training inputs
  Mat grid;
  if (split.train.input_dim() == 1) {
    const Mat pooled = split.train.pooled_inputs();
    const double lo = pooled.minCoeff(), hi = pooled.maxCoeff();
    grid = Mat(201, 1);
    for (Index i = 0; i < grid.rows(); ++i)
      grid(i, 0) = lo + (hi - lo) * double(i) / double(grid.rows() - 1);
  }

  std::vector<json> per_seed_metrics;
  std::vector<double> final_elbos;
  for (long rep = 0; rep < cfg.n_repeats; ++rep) {
    const std::uint64_t seed = cfg.seed + std::uint64_t(rep);
    const fs::path seed_dir = fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);

    ModelState state = build_model(r.spec, norm_data, seed);
    TrainConfig tc = r.train;
    tc.seed = seed;
    const TrainResult res = train(state, norm_data, tc);
    final_elbos.push_back(res.final_elbo);

    {
      auto out = open_out(seed_dir / "trace.csv");
      out << "step,elbo,seconds\n";
      for (const auto& p : res.trace)
        out << p.step << "," << p.elbo << "," << p.seconds << "\n";
    }
    save_checkpoint((seed_dir / "checkpoint.bin").string(), state,
                    norm_data.norm, resolved_json.dump());

    if (has_test) {
      RngStream eval_rng(seed, 4);
      const Metrics m = evaluate_model(state, split.train, norm_data.norm,
                                       split.test, int(cfg.n_pred_samples),
                                       eval_rng);
      json mj = metrics_to_json(m);
      mj["seed"] = seed;
      mj["final_elbo"] = res.final_elbo;
      write_json(seed_dir / "metrics.json", mj);
      per_seed_metrics.push_back(std::move(mj));
    }

    if (grid.rows() > 0) {
      RngStream curve_rng(seed, 5);
      const PredictiveSummary pred = predict_outputs(
          state, norm_data.norm, grid, int(cfg.n_pred_samples), curve_rng);
      write_prediction_csv(seed_dir / "curve.csv", grid, pred);
    }
    std::cout << "seed " << seed << ": final ELBO " << std::setprecision(6)
              << res.final_elbo << "\n";
  }

  json summary;
  summary["config"] = resolved_json;
  summary["n_seeds"] = cfg.n_repeats;
  {
    const MeanStd ms = aggregate(final_elbos);
    summary["final_elbo"] = {{"mean", ms.mean}, {"std", ms.std}};
  }
  if (!per_seed_metrics.empty()) {
    summary["metrics"] = aggregate_to_json(per_seed_metrics);
    print_aggregate(summary["metrics"], per_seed_metrics.size());
  }
  write_json(fs::path(cfg.out_dir) / "metrics.json", summary);
  return 0;
}

int run_predict(const std::string& ckpt_path, const std::string& input_path,
                const std::string& out_path, long samples, std::uint64_t seed) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Mat x = read_inputs_csv(input_path);
  if (x.cols() != ckpt.state.d)
    throw DimensionMismatch("input dimension " + std::to_string(x.cols()) +
                            " does not match checkpoint dimension " +
                            std::to_string(ckpt.state.d));
  RngStream rng(seed, 5);
  const PredictiveSummary pred =
      predict_outputs(ckpt.state, ckpt.norm, x, int(samples), rng);
  write_prediction_csv(out_path, x, pred);
  return 0;
}

int run_evaluate(const std::string& ckpt_path, const RunConfig& raw_cfg,
                 long samples, std::uint64_t seed, const std::string& out_path) {
  const Resolved r = resolve(raw_cfg);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Split split = load_case(r.cfg);
  RngStream rng(seed, 4);
  const Metrics m = evaluate_model(ckpt.state, split.train, ckpt.norm,
                                   split.test, int(samples), rng);
  const json mj = metrics_to_json(m);
  if (out_path.empty()) std::cout << mj.dump(2) << "\n";
  else write_json(out_path, mj);
  return 0;
}

int run_pod(const std::string& snapshots_path, long rank, bool center,
            const std::string& out_dir) {
  const Mat snapshots = read_matrix_csv(snapshots_path);
  const PodBasis basis = pod_decompose(snapshots, Index(rank), center);
  fs::create_directories(out_dir);
  write_matrix_csv(fs::path(out_dir) / "modes.csv", basis.modes);
  write_matrix_csv(fs::path(out_dir) / "coeffs.csv", basis.coeffs);
  write_matrix_csv(fs::path(out_dir) / "singular_values.csv",
                   Mat(basis.singular_values));

  const Mat recon = pod_reconstruct_all(basis);
  const double rel_err =
      (snapshots - recon).norm() / std::max(snapshots.norm(), 1e-300);
  write_json(fs::path(out_dir) / "summary.json",
             json{{"n_mesh", snapshots.rows()},
                  {"n_time", snapshots.cols()},
                  {"rank", rank},
                  {"centered", center},
                  {"relative_frobenius_error", rel_err}});
  std::cout << "rank " << rank << " relative reconstruction error "
            << std::setprecision(6) << rel_err << "\n";
  return 0;
}

int run_report(const std::string& dir) {
  std::vector<json> per_seed;
  std::vector<fs::path> seed_dirs;
  if (!fs::is_directory(dir)) throw MissingFile("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0)
      seed_dirs.push_back(e.path());
  std::sort(seed_dirs.begin(), seed_dirs.end());
  for (const auto& d : seed_dirs) {
    std::ifstream in(d / "metrics.json");
    if (!in) continue;
    json j;
    in >> j;
    per_seed.push_back(std::move(j));
  }
  if (per_seed.empty())
    throw MissingFile("no seed_*/metrics.json found under " + dir);
  print_aggregate(aggregate_to_json(per_seed), per_seed.size());
  return 0;
}

// Map the library's failure taxonomy onto the documented exit codes.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const MissingFile& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const SchemaMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const SizeMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ZeroVariance& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const EmptyTestSet& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidSpec& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NsvlmcError& e) {
    // remaining library failures are numerical (non-finite values, Cholesky
    // breakdowns, degenerate variances)
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

void add_run_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--config", "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("--case", cfg.case_name,
                  "toy|jura|eeg|sarcos_a|sarcos_b|sarcos_c|file");
  cmd->add_option("--data", cfg.data_path, "dataset CSV (canonical schema)");
  cmd->add_option("--test", cfg.test_path, "held-out CSV for --case file");
  cmd->add_option("--variant", cfg.variant,
                  "svlmc|nsvlmc|nmogp|ngprn|svlmc-dkl");
  cmd->add_option("--q", cfg.q, "latent processes");
  cmd->add_option("--H", cfg.h, "hidden mixture functions");
  cmd->add_option("--m", cfg.m, "inducing points per latent (0 = all train)");
  cmd->add_option("--iters", cfg.iters, "optimizer iterations");
  cmd->add_option("--minibatch", cfg.minibatch, "minibatch size (0 = full)");
  cmd->add_option("--s", cfg.s, "importance samples in the training ELBO");
  cmd->add_option("--lr", cfg.lr, "Adam learning rate");
  cmd->add_option("--length-scale", cfg.length_scale, "kernel length-scale init");
  cmd->add_option("--noise-var", cfg.noise_var, "noise variance init");
  cmd->add_option("--variance-mode", cfg.variance_mode,
                  "exact-cross|paper-literal");
  cmd->add_option("--activation", cfg.activation, "tanh|relu (nmogp)");
  cmd->add_option("--pred-samples", cfg.n_pred_samples,
                  "predictive mixture samples");
  cmd->add_option("--repeats", cfg.n_repeats, "seed repeats");
  cmd->add_option("--trace-every", cfg.trace_every, "ELBO trace cadence");
  cmd->add_option("--seed", cfg.seed, "base seed");
  cmd->add_option("--toy-seed", cfg.toy_seed, "toy generator seed");
  cmd->add_option("--out", cfg.out_dir, "output bundle directory");
}

// The config file must be applied before CLI11 assigns flag values, so flags
// win; pre-scan argv for it.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task sparse-variational LMC benchmark driver"};
  app.require_subcommand(1);

  RunConfig cfg;
  const std::string config_path = find_config_arg(argc, argv);
  if (!config_path.empty()) {
    const int rc = guarded([&] {
      apply_config_file(cfg, config_path);
      return 0;
    });
    if (rc != 0) return rc;
  }

  // toy-gen
  std::uint64_t toy_seed = 0;
  std::string toy_out = "toy.csv";
  auto* toy_cmd = app.add_subcommand("toy-gen", "write the toy dataset as CSV");
  toy_cmd->add_option("--seed", toy_seed, "generator seed");
  toy_cmd->add_option("--out", toy_out, "output CSV path");

  // train
  auto* train_cmd =
      app.add_subcommand("train", "train with seed repeats and write a bundle");
  add_run_options(train_cmd, cfg);

  // predict
  std::string ckpt_path, input_path, pred_out = "predictions.csv";
  long pred_samples = 100;
  std::uint64_t pred_seed = 0;
  auto* pred_cmd = app.add_subcommand("predict", "predict from a checkpoint");
  pred_cmd->add_option("--checkpoint", ckpt_path)->required();
  pred_cmd->add_option("--input", input_path, "CSV with header x_0,...")
      ->required();
  pred_cmd->add_option("--out", pred_out);
  pred_cmd->add_option("--samples", pred_samples);
  pred_cmd->add_option("--seed", pred_seed);

  // evaluate
  std::string eval_ckpt, eval_out;
  long eval_samples = 100;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "score a checkpoint on a case's test split");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  add_run_options(eval_cmd, cfg);
  eval_cmd->add_option("--samples", eval_samples);
  eval_cmd->add_option("--eval-seed", eval_seed);
  eval_cmd->add_option("--metrics-out", eval_out, "JSON path (default stdout)");

  // pod
  std::string pod_snapshots, pod_out = "pod";
  long pod_rank = 5;
  bool pod_center = false;
  auto* pod_cmd =
      app.add_subcommand("pod", "proper orthogonal decomposition of snapshots");
  pod_cmd->add_option("--snapshots", pod_snapshots, "CSV, rows=mesh, cols=time")
      ->required();
  pod_cmd->add_option("--rank", pod_rank);
  pod_cmd->add_flag("--center", pod_center, "subtract the temporal mean first");
  pod_cmd->add_option("--out", pod_out, "output directory");

  // report
  std::string report_dir;
  auto* report_cmd =
      app.add_subcommand("report", "aggregate per-seed metrics of a bundle");
  report_cmd->add_option("--dir", report_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  return guarded([&]() -> int {
    if (toy_cmd->parsed()) {
      save_canonical_csv(gen_toy(toy_seed).data, toy_out);
      std::cout << "wrote " << toy_out << "\n";
      return 0;
    }
    if (train_cmd->parsed()) return run_train(cfg);
    if (pred_cmd->parsed())
      return run_predict(ckpt_path, input_path, pred_out, pred_samples, pred_seed);
    if (eval_cmd->parsed())
      return run_evaluate(eval_ckpt, cfg, eval_samples, eval_seed, eval_out);
    if (pod_cmd->parsed()) return run_pod(pod_snapshots, pod_rank, pod_center, pod_out);
    if (report_cmd->parsed()) return run_report(report_dir);
    return 2;
  });
}

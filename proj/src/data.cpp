#include "nsvlmc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace nsvlmc {

Mat MultiTaskDataset::pooled_inputs() const {
  Mat out(total_points(), input_dim());
  Index row = 0;
  for (const auto& t : tasks) {
    out.middleRows(row, t.x.rows()) = t.x;
    row += t.x.rows();
  }
  return out;
}

MultiTaskDataset normalize(const MultiTaskDataset& data) {
  if (data.tasks.empty()) throw InvalidSpec("normalize: empty dataset");
  const Index d = data.input_dim();
  const Mat pooled = data.pooled_inputs();
  const double n = double(pooled.rows());

  NormStats norm;
  norm.active = true;
  norm.x_mean = pooled.colwise().mean();
  norm.x_std = Vec(d);
  for (Index j = 0; j < d; ++j) {
    const double var = (pooled.col(j).array() - norm.x_mean[j]).square().sum() / n;
    if (var < 1e-24)
      throw ZeroVariance("normalize: input column " + std::to_string(j) + " is constant");
    norm.x_std[j] = std::sqrt(var);
  }

  MultiTaskDataset out;
  out.norm = norm;
  for (const auto& t : data.tasks) {
    const double mean = t.y.mean();
    const double var = (t.y.array() - mean).square().sum() / double(t.y.size());
    if (var < 1e-24)
      throw ZeroVariance("normalize: constant outputs in task " +
                         std::to_string(out.tasks.size()));
    const double sd = std::sqrt(var);
    out.norm.y_mean.push_back(mean);
    out.norm.y_std.push_back(sd);

    TaskBlock b;
    b.x = (t.x.rowwise() - norm.x_mean.transpose()).array().rowwise() /
          norm.x_std.transpose().array();
    b.y = (t.y.array() - mean) / sd;
    out.tasks.push_back(std::move(b));
  }
  return out;
}

Vec normalize_input(const NormStats& norm, const Vec& x) {
  if (!norm.active) return x;
  return (x - norm.x_mean).cwiseQuotient(norm.x_std);
}

double denormalize_output(const NormStats& norm, Index task, double y) {
  if (!norm.active) return y;
  return y * norm.y_std[size_t(task)] + norm.y_mean[size_t(task)];
}

double denormalize_variance(const NormStats& norm, Index task, double var) {
  if (!norm.active) return var;
  return var * norm.y_std[size_t(task)] * norm.y_std[size_t(task)];
}

double ToyCase::truth(int task, double x) {
  const double f1 = 0.5 * std::sin(3.0 * x) + x;
  const double f2 = 3.0 * std::cos(x) - x;
  const double f3 = 2.5 * std::cos(5.0 * x - 1.0);
  const double f4 = std::sin(1.5 * x);
  switch (task) {
    case 0: return 0.5 * f1 - 0.4 * f2 + 0.6 * f3 + 0.6 * f4;
    case 1: return -0.3 * f1 + 0.43 * f2 - 0.5 * f3 + 0.1 * f4;
    case 2: return 1.5 * f1 + 0.3 * f3 + 0.6 * f4;
    default: throw InvalidSpec("toy truth: task out of range");
  }
}

ToyCase gen_toy(std::uint64_t seed) {
  RngStream rng(seed, 0);
  const Index counts[3] = {100, 10, 100};
  const double noise_sd = 0.2;  // variance 0.04

  ToyCase out;
  for (int c = 0; c < 3; ++c) {
    TaskBlock b;
    b.x = Mat(counts[c], 1);
    b.y = Vec(counts[c]);
    for (Index i = 0; i < counts[c]; ++i) b.x(i, 0) = -5.0 + 10.0 * rng.uniform();
    for (Index i = 0; i < counts[c]; ++i)
      b.y[i] = ToyCase::truth(c, b.x(i, 0)) + noise_sd * rng.normal();
    out.data.tasks.push_back(std::move(b));
  }
  return out;
}

SplitName parse_split_name(const std::string& name) {
  if (name == "jura") return SplitName::jura;
  if (name == "eeg") return SplitName::eeg;
  if (name == "sarcos_a") return SplitName::sarcos_a;
  if (name == "sarcos_b") return SplitName::sarcos_b;
  if (name == "sarcos_c") return SplitName::sarcos_c;
  throw InvalidSpec("unknown split name: " + name);
}

MultiTaskDataset load_canonical_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw SchemaMismatch(path + ": empty file");
  // strip a trailing \r from CRLF files
  if (!header.empty() && header.back() == '\r') header.pop_back();

  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  if (cols.size() < 3 || cols.front() != "task" || cols.back() != "y")
    throw SchemaMismatch(path + ": header must be task,x_0,...,y");
  const Index d = Index(cols.size()) - 2;
  for (Index j = 0; j < d; ++j)
    if (cols[size_t(j) + 1] != "x_" + std::to_string(j))
      throw SchemaMismatch(path + ": unexpected column " + cols[size_t(j) + 1]);

  std::map<long, std::vector<std::vector<double>>> rows;  // ordered by task id
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      char* end = nullptr;
      vals.push_back(std::strtod(tok.c_str(), &end));
      if (end == tok.c_str())
        throw SchemaMismatch(path + ": bad number at line " + std::to_string(line_no));
    }
    if (Index(vals.size()) != d + 2)
      throw SchemaMismatch(path + ": wrong column count at line " + std::to_string(line_no));
    rows[long(vals[0])].push_back(std::move(vals));
  }
  if (rows.empty()) throw SchemaMismatch(path + ": no data rows");

  MultiTaskDataset out;
  long expect = 0;
  for (auto& [task, task_rows] : rows) {
    if (task != expect++)
      throw SchemaMismatch(path + ": task ids must be contiguous from 0");
    TaskBlock b;
    b.x = Mat(Index(task_rows.size()), d);
    b.y = Vec(Index(task_rows.size()));
    for (Index i = 0; i < Index(task_rows.size()); ++i) {
      for (Index j = 0; j < d; ++j) b.x(i, j) = task_rows[size_t(i)][size_t(j) + 1];
      b.y[i] = task_rows[size_t(i)][size_t(d) + 1];
    }
    out.tasks.push_back(std::move(b));
  }
  return out;
}

void save_canonical_csv(const MultiTaskDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot write " + path);
  out.precision(17);
  out << "task";
  for (Index j = 0; j < data.input_dim(); ++j) out << ",x_" << j;
  out << ",y\n";
  for (Index c = 0; c < data.num_tasks(); ++c) {
    const auto& t = data.tasks[size_t(c)];
    for (Index i = 0; i < t.x.rows(); ++i) {
      out << c;
      for (Index j = 0; j < t.x.cols(); ++j) out << ',' << t.x(i, j);
      out << ',' << t.y[i] << '\n';
    }
  }
}

namespace {

void require_rows(const std::string& path, const MultiTaskDataset& d, Index task,
                  Index expected) {
  if (d.tasks[size_t(task)].x.rows() != expected)
    throw SizeMismatch(path + ": task " + std::to_string(task) + " has " +
                       std::to_string(d.tasks[size_t(task)].x.rows()) +
                       " rows, protocol requires " + std::to_string(expected));
}

// Move the trailing `n_test` rows of the given task into a held-out block.
void hold_out_tail(Split& split, Index task, Index n_test) {
  auto& t = split.train.tasks[size_t(task)];
  const Index n_train = t.x.rows() - n_test;
  split.test[size_t(task)].x = t.x.bottomRows(n_test);
  split.test[size_t(task)].y = t.y.tail(n_test);
  t.x = Mat(t.x.topRows(n_train));
  t.y = Vec(t.y.head(n_train));
}

void subsample_head(Split& split, Index task, Index n_keep) {
  auto& t = split.train.tasks[size_t(task)];
  t.x = Mat(t.x.topRows(n_keep));
  t.y = Vec(t.y.head(n_keep));
}

}  // namespace

Split load_split(SplitName name, const std::string& path) {
  MultiTaskDataset all = load_canonical_csv(path);
  Split split;
  split.train = std::move(all);
  split.test.resize(size_t(split.train.num_tasks()));

  switch (name) {
    case SplitName::jura:
      // tasks 0..2 = (Cd, Ni, Zn), 359 locations each; the last 100 Cd
      // observations are the prediction targets.
      if (split.train.num_tasks() != 3 || split.train.input_dim() != 2)
        throw SchemaMismatch(path + ": jura requires 3 tasks with 2-D inputs");
      for (Index c = 0; c < 3; ++c) require_rows(path, split.train, c, 359);
      hold_out_tail(split, 0, 100);
      break;
    case SplitName::eeg:
      // tasks 0..6 = (F3, F4, F5, F6, FZ, F1, F2) over 256 time steps; the
      // last 100 signals of FZ/F1/F2 are held out.
      if (split.train.num_tasks() != 7 || split.train.input_dim() != 1)
        throw SchemaMismatch(path + ": eeg requires 7 tasks with 1-D inputs");
      for (Index c = 0; c < 7; ++c) require_rows(path, split.train, c, 256);
      for (Index c = 4; c < 7; ++c) hold_out_tail(split, c, 100);
      break;
    case SplitName::sarcos_a:
    case SplitName::sarcos_b:
    case SplitName::sarcos_c: {
      // task 0 = target torque (4 for A/B, 6 for C) with the 4449-point test
      // set appended after the 44484-point train pool; task 1 = torque 7.
      if (split.train.num_tasks() != 2 || split.train.input_dim() != 21)
        throw SchemaMismatch(path + ": sarcos requires 2 tasks with 21-D inputs");
      require_rows(path, split.train, 0, 44484 + 4449);
      require_rows(path, split.train, 1, 44484);
      hold_out_tail(split, 0, 4449);
      if (name == SplitName::sarcos_a) subsample_head(split, 0, 50);
      else subsample_head(split, 0, 2000);
      break;
    }
  }
  return split;
}

}  // namespace nsvlmc

#include "smem/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "smem/errors.hpp"
#include "smem/random.hpp"

namespace smem {

namespace {

using Columns = std::vector<Vector>;

Columns gaussian_columns(std::size_t rows, std::size_t cols, Rng& rng) {
  Columns out(cols, Vector(rows));
  for (auto& c : out)
    for (double& v : c) v = rng.normal();
  return out;
}

// Modified Gram–Schmidt with one reorthogonalization pass.
void orthonormalize(Columns& q) {
  for (std::size_t j = 0; j < q.size(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const double r = dot(q[k], q[j]);
        for (std::size_t i = 0; i < q[j].size(); ++i) q[j][i] -= r * q[k][i];
      }
    }
    const double nrm = norm2(q[j]);
    if (!(nrm > 0.0)) throw DomainError("orthonormalize: rank-deficient draw");
    for (double& v : q[j]) v /= nrm;
  }
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_row(const std::string& line, const std::string& file, std::size_t lineno) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    double v = 0.0;
    auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc{})
      throw ParseError(file + ":" + std::to_string(lineno) + ": expected a number");
    out.push_back(v);
    p = res.ptr;
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p < end) {
      if (*p != ',') throw ParseError(file + ":" + std::to_string(lineno) + ": expected ','");
      ++p;
    }
  }
  return out;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    rows.push_back(parse_row(line, path.string(), lineno));
  }
  return rows;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidShape("dataset has an empty design");
  if (y.size() != x.rows()) throw InvalidShape("response length differs from the number of rows");
  if (!m.empty() && m.size() != x.rows()) throw InvalidShape("trial-count length differs from the number of rows");
  if (!beta_true.empty() && beta_true.size() != x.cols())
    throw InvalidShape("beta_true length differs from the number of columns");
}

DenseMatrix gen_design_raw(std::size_t n, std::size_t p, double cond, std::uint64_t seed) {
  if (p == 0 || n < p) throw InvalidShape("gen_design needs n >= p >= 1");
  if (!(cond >= 1.0) || !std::isfinite(cond)) throw DomainError("gen_design needs cond >= 1");
  Rng ru(seed, kStreamDesignU);
  Rng rv(seed, kStreamDesignV);
  Columns u = gaussian_columns(n, p, ru);
  Columns v = gaussian_columns(p, p, rv);
  orthonormalize(u);
  orthonormalize(v);

  Vector d(p, 1.0);
  for (std::size_t j = 1; j < p; ++j)
    d[j] = std::pow(cond, -0.5 * static_cast<double>(j) / static_cast<double>(p - 1));

  // W = diag(d)·Vᵀ, then X = U·W.
  DenseMatrix w(p, p);
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t j = 0; j < p; ++j) w(k, j) = d[k] * v[k][j];
  DenseMatrix x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t k = 0; k < p; ++k) {
      const double uik = u[k][i];
      auto wk = w.row(k);
      for (std::size_t j = 0; j < p; ++j) xi[j] += uik * wk[j];
    }
  }
  return x;
}

void standardize_columns(DenseMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x(i, j) -= mean;
      var += x(i, j) * x(i, j);
    }
    var /= static_cast<double>(n);
    if (!(var > 0.0)) throw DomainError("standardize_columns: constant column");
    const double s = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) x(i, j) *= s;
  }
}

DenseMatrix gen_design(std::size_t n, std::size_t p, double cond, std::uint64_t seed) {
  DenseMatrix x = gen_design_raw(n, p, cond, seed);
  standardize_columns(x);
  return x;
}

Vector gen_beta_true(const DenseMatrix& x, double signal, double density, std::uint64_t seed) {
  if (!(signal >= 0.0)) throw DomainError("signal must be nonnegative");
  if (!(density > 0.0 && density <= 1.0)) throw DomainError("density must lie in (0, 1]");
  const std::size_t p = x.cols();
  Rng rb(seed, kStreamBeta);
  Vector beta(p);
  for (double& b : beta) b = rb.normal();
  if (density < 1.0) {
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(density * static_cast<double>(p))));
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rm(seed, kStreamSparsity);
    shuffle(idx, rm);
    for (std::size_t k = keep; k < p; ++k) beta[idx[k]] = 0.0;
  }
  const double scale = norm2(matvec(x, beta)) / std::sqrt(static_cast<double>(x.rows()));
  for (double& b : beta) b = scale > 0.0 ? b * signal / scale : 0.0;
  return beta;
}

Vector gen_logistic(const DenseMatrix& x, std::span<const double> beta_true, std::uint64_t seed) {
  if (beta_true.size() != x.cols()) throw InvalidShape("gen_logistic: beta length differs from p");
  const Vector z = matvec(x, beta_true);
  Rng ry(seed, kStreamResponse);
  Vector y(x.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double prob = z[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-z[i])) : std::exp(z[i]) / (1.0 + std::exp(z[i]));
    y[i] = ry.uniform() < prob ? 1.0 : 0.0;
  }
  return y;
}

PresetInfo preset_info(const std::string& name) {
  if (name == "conv50") return {name, 2000, 20, 50.0, 101, 14.0, 1.0};
  if (name == "cond500") return {name, 2000, 20, 500.0, 102, 40.0, 1.0};
  if (name == "nesterov450") return {name, 2000, 20, 450.0, 103, 40.0, 1.0};
  if (name == "regpath") return {name, 5000, 200, 200.0, 104, 2.0, 1.0};
  if (name == "activeset") return {name, 5000, 500, 500.0, 105, 40.0, 0.3};
  std::string digits;
  if (name.rfind("highdim(", 0) == 0 && name.size() > 9 && name.back() == ')')
    digits = name.substr(8, name.size() - 9);
  else if (name.rfind("highdim", 0) == 0)
    digits = name.substr(7);
  if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    std::size_t p = 0;
    std::from_chars(digits.data(), digits.data() + digits.size(), p);
    if (p >= 1 && p <= 5000) return {"highdim" + digits, 5000, p, 500.0, 200 + p, 40.0, 1.0};
  }
  throw UnknownPreset("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"conv50", "cond500", "nesterov450", "regpath", "activeset", "highdim20", "highdim50", "highdim100",
          "highdim200"};
}

Dataset make_dataset(const PresetInfo& info) {
  Dataset d;
  d.name = info.name;
  d.seed = info.seed;
  d.target_cond = info.cond;
  d.x = gen_design(info.n, info.p, info.cond, info.seed);
  d.beta_true = gen_beta_true(d.x, info.signal, info.density, info.seed);
  d.y = gen_logistic(d.x, d.beta_true, info.seed);
  d.m.assign(info.n, 1.0);
  return d;
}

Dataset make_preset(const std::string& name, std::optional<std::uint64_t> seed) {
  PresetInfo info = preset_info(name);
  if (seed) info.seed = *seed;
  return make_dataset(info);
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "X.csv");
    for (std::size_t i = 0; i < data.n(); ++i) {
      auto row = data.x.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        out << format_double(row[j]);
      }
      out << '\n';
    }
    if (!out) throw Error("failed to write " + (dir / "X.csv").string());
  }
  {
    std::ofstream out(dir / "y.csv");
    for (std::size_t i = 0; i < data.n(); ++i) {
      out << format_double(data.y[i]);
      if (!data.m.empty() && data.m[i] != 1.0) out << ',' << format_double(data.m[i]);
      out << '\n';
    }
    if (!out) throw Error("failed to write " + (dir / "y.csv").string());
  }
  nlohmann::ordered_json meta;
  meta["name"] = data.name;
  meta["n"] = data.n();
  meta["p"] = data.p();
  meta["cond"] = data.target_cond;
  meta["seed"] = data.seed;
  meta["beta_true"] = data.beta_true;
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << '\n';
  if (!out) throw Error("failed to write " + (dir / "meta.json").string());
}

Dataset read_dataset(const std::filesystem::path& x_csv, const std::filesystem::path& y_csv) {
  const auto xr = read_csv(x_csv);
  const auto yr = read_csv(y_csv);
  if (xr.empty()) throw InvalidShape(x_csv.string() + ": no rows");
  const std::size_t p = xr.front().size();
  Dataset d;
  d.name = x_csv.parent_path().filename().string();
  d.x = DenseMatrix(xr.size(), p);
  for (std::size_t i = 0; i < xr.size(); ++i) {
    if (xr[i].size() != p) throw InvalidShape(x_csv.string() + ": row " + std::to_string(i + 1) + " has a different width");
    std::copy(xr[i].begin(), xr[i].end(), d.x.row(i).begin());
  }
  if (yr.size() != xr.size()) throw InvalidShape("X and y have different row counts");
  d.y.resize(yr.size());
  d.m.assign(yr.size(), 1.0);
  for (std::size_t i = 0; i < yr.size(); ++i) {
    if (yr[i].empty() || yr[i].size() > 2) throw InvalidShape(y_csv.string() + ": expected y or y,m per row");
    d.y[i] = yr[i][0];
    if (yr[i].size() == 2) d.m[i] = yr[i][1];
  }
  const auto meta_path = x_csv.parent_path() / "meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    try {
      const auto meta = nlohmann::json::parse(in);
      d.name = meta.value("name", d.name);
      d.seed = meta.value("seed", std::uint64_t{0});
      d.target_cond = meta.value("cond", 1.0);
      if (meta.contains("beta_true")) d.beta_true = meta["beta_true"].get<Vector>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": " + e.what());
    }
  }
  d.validate();
  return d;
}

}  // namespace smem

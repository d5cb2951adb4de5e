// Acceptance run: one PASS/FAIL line per criterion, each with its measured
// runtime against the runtime budget. The report is also written to the
// path given as the first argument.
//
// Optional: SHAPDEC_FIRE_CSV (and SHAPDEC_FIRE_TARGET, default "fire")
// points criterion 10 at a real fire data set; without it the criterion
// runs the synthetic independence and determinism checks.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "shapdec/shapdec.hpp"

using namespace shapdec;
namespace ex = shapdec::experiments;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::ostringstream report;
int failures = 0;

void emit(const std::string& id, const std::string& title, const Outcome& o, double seconds, double budget) {
  const bool in_time = seconds <= budget;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  char timing[96];
  std::snprintf(timing, sizeof timing, "%.2f s / %.0f s", seconds, budget);
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  " << id << "  " << title << "  [" << timing << "]";
  if (!o.detail.empty()) line << "  " << o.detail;
  if (!in_time) line << "  (runtime budget exceeded)";
  std::cout << line.str() << std::endl;
  report << line.str() << '\n';
}

template <class F>
void criterion(const std::string& id, const std::string& title, double budget, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit(id, title, o, s, budget);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Tracks the worst |error| against a tolerance.
struct Worst {
  double tol;
  double value = 0.0;
  void add(double err) { value = std::max(value, std::fabs(err)); }
  Outcome outcome(const std::string& what) const {
    return {value <= tol, "max " + what + " " + fmt(value) + " (tol " + fmt(tol) + ")"};
  }
};

GaussianModel random_gaussian(std::mt19937_64& gen, int m) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix l(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) l(r, c) = n(gen);
  Matrix cov = l * l.transpose() + 0.5 * Matrix::Identity(m, m);
  const Vector d = cov.diagonal().cwiseSqrt().cwiseInverse();
  GaussianModel g;
  g.cov = d.asDiagonal() * cov * d.asDiagonal();
  g.mean = Vector::Zero(m);
  for (int j = 0; j < m; ++j) g.mean[j] = n(gen);
  return g;
}

int run_cli(const std::string& args, const std::string& env) {
  const std::string cmd = env + " \"" SHAPDEC_CLI_PATH "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

// ---------------------------------------------------------------------------

Outcome toy_oracle() {
  const auto d = exact_decomposition(ex::toy_model(), ex::toy_joint(), Vector::Ones(2));
  Worst w{1e-12};
  const double expect[3][2] = {{0.4, 0.1}, {0.4, 0.0}, {0.0, 0.1}};
  for (int i = 0; i < 2; ++i) {
    w.add(d.phi[i] - expect[0][i]);
    w.add(d.phi_int[i] - expect[1][i]);
    w.add(d.phi_dep[i] - expect[2][i]);
  }
  w.add(d.base - 0.5);
  return w.outcome("error");
}

Outcome toy_sampled() {
  const auto exact = exact_decomposition(ex::toy_model(), ex::toy_joint(), Vector::Ones(2));
  const DiscreteSampler s(ex::toy_joint());
  Vector phi = Vector::Zero(2), phi_int = Vector::Zero(2), phi_dep = Vector::Zero(2);
  double base = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = decompose(ex::toy_model(), s, Vector::Ones(2), 10000, 10000, seed);
    phi += d.phi / 5.0;
    phi_int += d.phi_int / 5.0;
    phi_dep += d.phi_dep / 5.0;
    base += d.base / 5.0;
  }
  Worst w{0.02};
  for (int i = 0; i < 2; ++i) {
    w.add(phi[i] - exact.phi[i]);
    w.add(phi_int[i] - exact.phi_int[i]);
    w.add(phi_dep[i] - exact.phi_dep[i]);
  }
  w.add(base - exact.base);
  return w.outcome("deviation");
}

Outcome closed_forms() {
  ex::CorrelationConfig c;
  c.a12 = 2.0;
  c.alphas = {0.0, 0.25, 0.5, 0.75};
  c.repeats = 5;
  c.seed = 11;
  const auto rows = ex::run_correlation_study(c);
  Worst dep{0.05}, res{1e-9};
  for (const auto& r : rows) {
    for (Eigen::Index i = 0; i < 2; ++i) dep.add(r.phi_dep[i] - 1.5 * r.alpha);
    res.add(r.residual_exact - std::sqrt(2.0) * std::fabs(1.0 - 2.0 * r.alpha));
  }
  const auto a = dep.outcome("|phi_dep - 1.5a|"), b = res.outcome("|residual - sqrt2|1-2a||");
  return {a.pass && b.pass, a.detail + ", " + b.detail};
}

Outcome residual_mean() {
  std::mt19937_64 gen(404);
  Worst w{1e-12};
  for (int t = 0; t < 20; ++t) {
    const auto p = oracle::random_problem(gen);
    const ExactDiscreteValue vf(*p.model, p.joint, ValueKind::Conditional);
    const auto table = shapley_residuals(vf, p.x);
    const auto phi = oracle::shapley(3, [&](std::uint64_t s) { return oracle::conditional_value(p.joint, *p.model, p.x, s); });
    for (std::size_t i = 0; i < 3; ++i) {
      // Weighted average recomputed from the table, with the oracle φ.
      double avg = 0.0;
      for (const auto& e : table.entries[i]) avg += e.weight * (e.contribution - phi[i]);
      w.add(avg);
    }
  }
  return w.outcome("|weighted mean residual|");
}

Outcome dummy() {
  std::mt19937_64 gen(505);
  Worst sampled{0.02}, exact{1e-12};
  for (int t = 0; t < 10; ++t) {
    const int j = static_cast<int>(gen() % 4);
    const GaussianSampler s(random_gaussian(gen, 4));
    std::normal_distribution<double> n(0.0, 1.0);
    Vector c(4);
    for (int k = 0; k < 4; ++k) c[k] = k == j ? 0.0 : n(gen);
    const FunctionModel f(4, [c, j](const Sample& x) {
      double v = c.dot(x);
      for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
          if (a != j && b != j) v += 0.3 * x[a] * x[b];
      return v + std::sin(x[(j + 1) % 4]);
    });
    const Sample x = s.model().mean + Vector::Ones(4);
    const Vector parts = interventional_parts(f, s, x, 20000, RngStream(static_cast<std::uint64_t>(t), 1));
    sampled.add(parts[j]);

    const auto p = oracle::random_problem(gen);
    const int jd = t % 3;
    const FunctionModel g(3, [jd](const Sample& z) {
      const int a = (jd + 1) % 3, b = (jd + 2) % 3;
      return std::sin(1.7 * z[a]) + std::cos(z[b] + 0.4) + 0.5 * z[a] * z[b];
    });
    exact.add(exact_decomposition(g, p.joint, p.x).phi_int[jd]);
  }
  const auto a = sampled.outcome("|phi_int| sampled"), b = exact.outcome("|phi_int| exact");
  return {a.pass && b.pass, a.detail + ", " + b.detail};
}

Outcome additive_split() {
  std::mt19937_64 gen(606);
  Worst w{1e-12};
  const std::vector<std::vector<std::size_t>> groups = {{0}, {1}, {2}, {0, 1}, {1, 2}, {0, 2}, {0, 1, 2}};
  for (int t = 0; t < 10; ++t) {
    const auto p = oracle::random_problem(gen);
    const DiscreteSampler s(p.joint);
    std::vector<AdditiveComponent> comps;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (const auto& grp : groups) {
      if (gen() % 2) continue;
      // Random table over the component's own features (3 levels each).
      auto table = std::make_shared<std::vector<double>>(27);
      for (auto& v : *table) v = u(gen);
      comps.push_back({grp, std::make_shared<FunctionModel>(3, [grp, table](const Sample& z) {
                         std::size_t code = 0;
                         for (auto g : grp) code = code * 3 + static_cast<std::size_t>(z[static_cast<Eigen::Index>(g)]);
                         return (*table)[code];
                       })});
    }
    if (comps.empty()) comps.push_back({{0}, std::make_shared<FunctionModel>(3, [](const Sample& z) { return z[0]; })});
    w.add(additive_split_check(comps, s, p.x).max_abs_delta());
  }
  return w.outcome("|delta|");
}

Outcome linear_closed_form() {
  std::mt19937_64 gen(707);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto g = random_gaussian(gen, 5);
    const GaussianSampler s(g);
    RngStream r(static_cast<std::uint64_t>(t), 3);
    const FeatureMatrix bg({"a", "b", "c", "d", "e"}, s.sample(Coalition(5), Vector::Zero(5), 40000, r));
    std::normal_distribution<double> n(0.0, 1.0);
    Vector a(5), x(5);
    for (int k = 0; k < 5; ++k) {
      a[k] = n(gen) + (k % 2 ? 1.0 : -1.0);
      x[k] = g.mean[k] + (gen() % 2 ? 1.5 : -1.5);
    }
    const LinearModel f(a, 0.7);
    const InterventionalValue vf(f, bg, InterventionalValue::kAllRows);
    const Vector phi = kernel_shap(vf, x, RngStream(static_cast<std::uint64_t>(t), 4)).phi;
    for (int k = 0; k < 5; ++k) {
      const double psi = a[k] * (x[k] - g.mean[k]);
      worst = std::max(worst, std::fabs(phi[k] - psi) / std::fabs(psi));
    }
  }
  return {worst <= 0.02, "max relative error " + fmt(worst) + " (tol 0.02)"};
}

Outcome independence() {
  std::mt19937_64 gen(808);
  Worst dep{0.03}, intv{0.03};
  for (int t = 0; t < 3; ++t) {
    GaussianModel g;
    g.mean = Vector::Zero(3);
    g.cov = Matrix::Identity(3, 3);
    const GaussianSampler s(g);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector b(3), x(3);
    Matrix a = Matrix::Zero(3, 3);
    for (int k = 0; k < 3; ++k) {
      b[k] = u(gen);
      x[k] = u(gen);
    }
    a(0, 1) = a(1, 0) = 0.5 * u(gen);
    const QuadraticModel f(0.2, b, a);
    const auto d = decompose(f, s, x, 20000, 20000, static_cast<std::uint64_t>(t));
    const QuadraticGaussianValue exact(f, g, ValueKind::Interventional);
    const Vector shap = kernel_shap(exact, x, RngStream()).phi;
    for (int k = 0; k < 3; ++k) {
      dep.add(d.phi_dep[k]);
      intv.add(d.phi_int[k] - shap[k]);
    }
  }
  const auto a = dep.outcome("|phi_dep|"), b = intv.outcome("|phi_int - interventional SHAP|");
  return {a.pass && b.pass, a.detail + ", " + b.detail};
}

struct ImputationOutcome {
  Outcome marginal, conditional;
};

ImputationOutcome imputation_ordering() {
  const auto data = ex::generate_housing(506, 0);
  ex::ImputationConfig c;
  c.model = "linear";
  c.towns = 200;
  c.seed = 1;
  const auto r = ex::run_imputation_study(data, c);
  const std::size_t m = data.features.features();
  ImputationOutcome out;

  const auto& is = r.curve("interventional-shap", "marginal-mean").mean;
  const auto& ip = r.curve("interventional-part", "marginal-mean").mean;
  const auto& cs = r.curve("conditional-shap", "marginal-mean").mean;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t worst_k = 0;
  for (std::size_t k = 1; k < m; ++k) {
    const double margin = std::min(is[k] - ip[k], ip[k] - cs[k]);
    if (margin < worst) {
      worst = margin;
      worst_k = k;
    }
  }
  out.marginal = {worst >= -1e-3, "min over k of min(IS-IP, IP-CS) = " + fmt(worst) + " at k=" +
                                      std::to_string(worst_k) + " (slack 1e-3)"};

  const auto& cis = r.curve("interventional-shap", "conditional-mean").mean;
  const auto& cip = r.curve("interventional-part", "conditional-mean").mean;
  const auto& ccs = r.curve("conditional-shap", "conditional-mean").mean;
  double avg_is = 0.0, avg_ip = 0.0, avg_cs = 0.0;
  std::size_t ip_top = 0;
  for (std::size_t k = 1; k < m; ++k) {
    avg_is += cis[k] / static_cast<double>(m - 1);
    avg_ip += cip[k] / static_cast<double>(m - 1);
    avg_cs += ccs[k] / static_cast<double>(m - 1);
    ip_top += cip[k] > std::max(cis[k], ccs[k]);
  }
  out.conditional = {avg_ip > std::max(avg_is, avg_cs),
                     "k-averaged change IS " + fmt(avg_is) + ", IP " + fmt(avg_ip) + ", CS " + fmt(avg_cs) +
                         "; IP highest at " + std::to_string(ip_top) + "/" + std::to_string(m - 1) + " k"};
  return out;
}

Outcome fire_real(const std::string& path, const std::string& target) {
  const auto data = read_csv(path, target);
  const auto r = ex::run_fire_study(data, ex::FireConfig{});
  const std::map<std::string, int> expect = {{"Ws", +1}, {"RH", -1}, {"T", +1}, {"Rain", -1}};
  bool ok = true;
  std::string detail = "corr(x, phi_int):";
  for (const auto& [name, sign] : expect) {
    const auto& row = r.row(name);
    const double v = row.phi_int.value_or(0.0);
    ok = ok && v * sign > 0.0;
    detail += " " + name + " " + fmt(v);
  }
  const double rain_dep = r.row("Rain").phi_dep.value_or(0.0);
  ok = ok && rain_dep > 0.0;
  return {ok, detail + "; corr(Rain, phi_dep) " + fmt(rain_dep)};
}

Outcome fire_synthetic() {
  // Independence: on a factorial design the dependent parts carry no signal.
  const auto indep = ex::generate_fire(244, 4, true);
  const auto r = ex::run_fire_study(indep, ex::FireConfig{});
  Worst w{0.1};
  for (const auto& row : r.table) w.add(row.phi_dep.value_or(0.0));
  const auto a = w.outcome("|corr(x, phi_dep)| independent");

  // Determinism: identical results across runs and thread counts.
  const auto data = ex::generate_fire(80, 5);
  ex::FireConfig c;
  c.k1 = 200;
  c.k2 = 400;
  c.forest.trees = 30;
  setenv("SHAPDEC_THREADS", "1", 1);
  const auto r1 = ex::run_fire_study(data, c);
  setenv("SHAPDEC_THREADS", "8", 1);
  const auto r8 = ex::run_fire_study(data, c);
  unsetenv("SHAPDEC_THREADS");
  bool same = r1.output == r8.output && r1.graph.values == r8.graph.values;
  for (std::size_t k = 0; k < r1.decompositions.size(); ++k)
    same = same && to_json(r1.decompositions[k]) == to_json(r8.decompositions[k]);
  return {a.pass && same, a.detail + "; determinism " + (same ? "ok" : "mismatch")};
}

Outcome kernel_vs_enumeration() {
  std::mt19937_64 gen(909);
  Worst w{1e-9};
  for (int t = 0; t < 20; ++t) {
    const auto p = oracle::random_problem(gen);
    const auto kind = t % 2 ? ValueKind::Conditional : ValueKind::Interventional;
    const ExactDiscreteValue vf(*p.model, p.joint, kind);
    const Vector phi = kernel_shap(vf, p.x, RngStream(static_cast<std::uint64_t>(t), 0)).phi;
    const auto brute = oracle::shapley(3, [&](std::uint64_t s) {
      return kind == ValueKind::Conditional ? oracle::conditional_value(p.joint, *p.model, p.x, s)
                                            : oracle::interventional_value(p.joint, *p.model, p.x, s);
    });
    for (int i = 0; i < 3; ++i) w.add(phi[i] - brute[static_cast<std::size_t>(i)]);
  }
  return w.outcome("|kernel - enumeration|");
}

Outcome cli_determinism() {
  const fs::path work = fs::temp_directory_path() / "shapdec_acceptance_cli";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();
  if (run_cli("generate toy --seed 1 --out " + w, "") != 0) return {false, "generate toy failed"};
  const std::vector<std::pair<std::string, std::string>> invocations = {
      {"explain", "explain --data " + w + "/toy.csv --model " + w + "/toy_model.json --sampler discrete --sample 1,1 "
                  "--k1 2000 --k2 2000 --plot --out "},
      {"toy", "experiment toy --k1 2000 --k2 2000 --out "},
      {"correlation", "experiment correlation --alphas=-0.5,0,0.5 --k1 2000 --k2 4000 --out "},
      {"housing", "experiment housing --synthetic --towns 20 --k1 200 --k2 400 --out "},
      {"fire", "experiment fire --synthetic --k1 200 --k2 400 --trees 20 --out "},
  };
  std::string bad;
  std::size_t files = 0;
  for (const auto& [name, args] : invocations) {
    std::map<std::string, std::string> first;
    int run_no = 0;
    for (const char* threads : {"1", "1", "8", "8"}) {
      const fs::path out = work / (name + "_" + std::to_string(run_no++));
      if (run_cli(args + out.string(), std::string("SHAPDEC_THREADS=") + threads) != 0) {
        bad += " " + name + "(exit)";
        break;
      }
      auto snap = snapshot(out);
      if (run_no == 1) {
        first = std::move(snap);
        files += first.size();
        bool has_json = false, has_svg = false;
        for (const auto& [f, _] : first) {
          has_json = has_json || f.ends_with(".json");
          has_svg = has_svg || f.ends_with(".svg");
        }
        if (!has_json || !has_svg) bad += " " + name + "(missing outputs)";
      } else if (snap != first) {
        bad += " " + name + "(threads=" + threads + ")";
        break;
      }
    }
  }
  fs::remove_all(work);
  if (!bad.empty()) return {false, "differences:" + bad};
  return {true, std::to_string(invocations.size()) + " invocations x 4 runs, " + std::to_string(files) +
                    " files byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  criterion("1", "toy oracle", 1, toy_oracle);
  criterion("2", "sampled toy vs oracle", 10, toy_sampled);
  criterion("3", "bivariate closed forms", 60, closed_forms);
  criterion("4", "residuals average to zero", 10, residual_mean);
  criterion("5", "dummy feature", 60, dummy);
  criterion("6", "additive split", 10, additive_split);
  criterion("7", "linear interventional closed form", 30, linear_closed_form);
  criterion("8", "independence collapse", 30, independence);
  {
    const auto t0 = std::chrono::steady_clock::now();
    ImputationOutcome o;
    try {
      o = imputation_ordering();
    } catch (const std::exception& e) {
      o.marginal = o.conditional = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit("9a", "imputation ordering, marginal-mean", o.marginal, s, 600);
    emit("9b", "imputation ordering, conditional-mean", o.conditional, s, 600);
  }
  if (const char* path = std::getenv("SHAPDEC_FIRE_CSV")) {
    const char* target = std::getenv("SHAPDEC_FIRE_TARGET");
    criterion("10", "fire study signs", 600, [&] { return fire_real(path, target ? target : "fire"); });
  } else {
    criterion("10", "fire study (synthetic: independence + determinism)", 600, fire_synthetic);
  }
  criterion("11", "kernel SHAP vs enumeration", 10, kernel_vs_enumeration);
  criterion("12", "CLI determinism", 300, cli_determinism);

  const std::string summary = std::to_string(failures) + " criterion line(s) failed";
  std::cout << summary << std::endl;
  report << summary << '\n';
  if (argc > 1) {
    std::ofstream out(argv[1]);
    out << report.str();
  }
  return 0;
}

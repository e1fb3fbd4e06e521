// endseq command-line tool: residual-transform tables, END/iid/comonotonic/cm
// sampling, dependence-uncertainty bounds and the verification suites.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "endseq/dist_spec.hpp"
#include "endseq/output.hpp"
#include "endseq/residual.hpp"
#include "endseq/riskagg.hpp"
#include "endseq/rng.hpp"
#include "endseq/sampler.hpp"
#include "endseq/verify.hpp"

namespace {

using namespace endseq;

std::uint64_t defaultSeed() {
  if (const char* env = std::getenv("ENDSEQ_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return rng::kDefaultSeed;
}

struct Options {
  std::string dist;
  std::string scenario = "end";
  std::string measure = "var";
  std::string suite = "all";
  std::string gSpec;
  std::string out = "csv";
  std::string outputPath;
  std::string budget = "small";
  std::vector<long long> ns{100};
  long long n = 100;
  long long reps = 100;
  int grid = 64;
  double p = 0.9;
  double momentOrder = 0.0;
  std::uint64_t seed = defaultSeed();
};

OutFormat parseFormat(const std::string& s) {
  if (s == "csv") return OutFormat::Csv;
  if (s == "jsonl") return OutFormat::Jsonl;
  throw CLI::ValidationError("--out must be csv or jsonl");
}

Scenario parseScenario(const std::string& s) {
  if (s == "end") return Scenario::End;
  if (s == "iid") return Scenario::Independent;
  if (s == "comonotone") return Scenario::Comonotonic;
  if (s == "cm") return Scenario::CmPeriodic;
  throw CLI::ValidationError("--scenario must be end|iid|comonotone|cm");
}

std::function<double(double)> parseConvexSpec(const std::string& s) {
  const auto mk = [&](const std::string& prefix) -> std::optional<double> {
    if (s.rfind(prefix, 0) != 0) return std::nullopt;
    return std::stod(s.substr(prefix.size()));
  };
  if (const auto c = mk("quad:center=")) {
    const double center = *c;
    return [center](double x) { return (x - center) * (x - center); };
  }
  if (const auto c = mk("abs:center=")) {
    const double center = *c;
    return [center](double x) { return std::abs(x - center); };
  }
  if (const auto c = mk("stoploss:k=")) {
    const double k = *c;
    return [k](double x) { return std::max(x - k, 0.0); };
  }
  throw CLI::ValidationError("--g must be quad:center=C, abs:center=C or stoploss:k=K");
}

struct Sink {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = nullptr;
};

Sink openSink(const std::string& path) {
  Sink s;
  if (path.empty()) {
    s.stream = &std::cout;
    return s;
  }
  s.file = std::make_unique<std::ofstream>(path);
  if (!*s.file) throw std::runtime_error("cannot open output file '" + path + "'");
  s.stream = s.file.get();
  return s;
}

std::string headerLine(const std::string& configCanonical, std::uint64_t seed) {
  std::ostringstream os;
  os << "endseq version=" << kVersion << " config=" << verify::digest(configCanonical)
     << " seed=" << seed;
  return os.str();
}

int runResidual(const Options& opt) {
  const MarginalDistribution dist = parseDistSpec(opt.dist);
  const ResidualTransform rt(dist);
  const int n = std::max(2, opt.grid);
  Sink sink = openSink(opt.outputPath);
  TableWriter w(*sink.stream, parseFormat(opt.out),
                {"level", "H", "s", "A", "B", "K", "u", "q", "Z", "F"});
  std::ostringstream cfg;
  cfg << "residual|" << dist.description() << "|grid=" << n << "|out=" << opt.out;
  w.comment(headerLine(cfg.str(), opt.seed));
  w.header();
  const double c = rt.hMin();
  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / (n - 1);
    const double level = frac;
    const double s = c * (1.0 - frac);
    const double q = (static_cast<double>(i) + 0.5) / n;
    const double z = rt.residualSample(q);
    w.row({level, rt.h(level), s, rt.branchA(s), rt.branchB(s), rt.kCdf(s),
           rt.uWeight(s), q, z, rt.residualCdf(z)});
  }
  return 0;
}

int runSample(const Options& opt) {
  const MarginalDistribution dist = parseDistSpec(opt.dist);
  const ResidualTransform rt(dist);
  const Scenario sc = parseScenario(opt.scenario);
  if (opt.n < 1 || opt.reps < 1) {
    throw CLI::ValidationError("--n and --reps must be positive");
  }
  MixProvider provider;
  const MixProvider* providerPtr = nullptr;
  if (sc == Scenario::CmPeriodic) {
    provider = antitheticMixProvider(rt);
    providerPtr = &provider;
  }
  Sink sink = openSink(opt.outputPath);
  TableWriter w(*sink.stream, parseFormat(opt.out), {"rep", "k", "x"});
  std::ostringstream cfg;
  cfg << "sample|" << dist.description() << "|sc=" << opt.scenario << "|n=" << opt.n
      << "|reps=" << opt.reps << "|out=" << opt.out;
  w.comment(headerLine(cfg.str(), opt.seed));
  w.header();
  for (long long rep = 0; rep < opt.reps; ++rep) {
    const auto path = samplePath(rt, sc, static_cast<std::size_t>(opt.n), opt.seed,
                                 static_cast<std::uint64_t>(rep), providerPtr);
    for (std::size_t k = 0; k < path.size(); ++k) {
      w.row({rep, static_cast<std::int64_t>(k + 1), path[k]});
    }
  }
  return 0;
}

int runCompare(const Options& opt) {
  const MarginalDistribution dist = parseDistSpec(opt.dist);
  const ResidualTransform rt(dist);
  if (opt.reps < 2) throw CLI::ValidationError("--reps must be at least 2");
  Sink sink = openSink(opt.outputPath);
  TableWriter w(*sink.stream, parseFormat(opt.out),
                {"n", "scenario", "var_estimate", "stderr"});
  std::ostringstream cfg;
  cfg << "compare|" << dist.description() << "|reps=" << opt.reps << "|out=" << opt.out;
  for (auto n : opt.ns) cfg << "|" << n;
  w.comment(headerLine(cfg.str(), opt.seed));
  w.header();
  const std::vector<std::pair<std::string, Scenario>> scenarios{
      {"end", Scenario::End},
      {"iid", Scenario::Independent},
      {"comonotone", Scenario::Comonotonic}};
  for (long long n : opt.ns) {
    if (n < 1) throw CLI::ValidationError("--n entries must be positive");
    for (const auto& [name, sc] : scenarios) {
      std::vector<double> sums(static_cast<std::size_t>(opt.reps));
      parallelFor(sums.size(), [&](std::size_t rep) {
        const auto path =
            samplePath(rt, sc, static_cast<std::size_t>(n), opt.seed, rep);
        KahanSum s;
        for (double x : path) s.add(x);
        sums[rep] = s.value();
      });
      const auto ve = verify::sampleVariance(sums);
      w.row({static_cast<std::int64_t>(n), name, ve.variance, ve.se});
    }
  }
  return 0;
}

int runBounds(const Options& opt) {
  const MarginalDistribution dist = parseDistSpec(opt.dist);
  Sink sink = openSink(opt.outputPath);
  const OutFormat fmt = parseFormat(opt.out);
  std::ostringstream cfg;
  cfg << "bounds|" << dist.description() << "|p=" << opt.p << "|grid=" << opt.grid
      << "|measure=" << opt.measure << "|k=" << opt.momentOrder << "|out=" << opt.out;
  for (auto n : opt.ns) cfg << "|" << n;
  const std::optional<double> k =
      opt.momentOrder > 0.0 ? std::optional<double>(opt.momentOrder) : std::nullopt;

  if (opt.measure == "var") {
    TableWriter w(*sink.stream, fmt,
                  {"p", "n", "var_sup_lower", "var_sup_upper", "var_inf_lower",
                   "var_inf_upper", "q_star_sup", "q_star_inf"});
    w.comment(headerLine(cfg.str(), opt.seed));
    w.header();
    for (long long n : opt.ns) {
      const auto r = varEnvelope(dist, opt.p, n, opt.grid, k);
      w.row({opt.p, static_cast<std::int64_t>(n), r.varSup.lower, r.varSup.upper,
             r.varInf.lower, r.varInf.upper, r.qStarSup, r.qStarInf});
    }
    return 0;
  }
  if (opt.measure == "tvar") {
    TableWriter w(*sink.stream, fmt,
                  {"p", "n", "tvar_inf_lower", "tvar_inf_upper", "tvar_sup",
                   "width_divergent"});
    w.comment(headerLine(cfg.str(), opt.seed));
    w.header();
    for (long long n : opt.ns) {
      const auto r = tvarEnvelope(dist, opt.p, n);
      w.row({opt.p, static_cast<std::int64_t>(n), r.tvarInf.lower, r.tvarInf.upper,
             r.tvarSup, static_cast<std::int64_t>(r.tvarWidthDivergent ? 1 : 0)});
    }
    return 0;
  }
  if (opt.measure == "convex") {
    if (opt.gSpec.empty()) throw CLI::ValidationError("--measure convex needs --g");
    const auto g = parseConvexSpec(opt.gSpec);
    TableWriter w(*sink.stream, fmt, {"n", "lower", "upper"});
    w.comment(headerLine(cfg.str() + "|g=" + opt.gSpec, opt.seed));
    w.header();
    for (long long n : opt.ns) {
      const auto [lower, upper] = convexSandwich(dist, g, n, opt.seed);
      w.row({static_cast<std::int64_t>(n), lower, upper});
    }
    return 0;
  }
  if (opt.measure == "ratio") {
    TableWriter w(*sink.stream, fmt,
                  {"p", "n", "ratio_lower", "ratio_upper", "limit"});
    w.comment(headerLine(cfg.str(), opt.seed));
    w.header();
    for (long long n : opt.ns) {
      const auto r = superadditiveRatio(dist, opt.p, n, opt.grid);
      w.row({opt.p, static_cast<std::int64_t>(n), r.ratio.lower, r.ratio.upper,
             r.limit});
    }
    return 0;
  }
  if (opt.measure == "equiv") {
    TableWriter w(*sink.stream, fmt, {"p", "n", "lower_ratio", "upper_ratio"});
    w.comment(headerLine(cfg.str(), opt.seed));
    w.header();
    for (const auto& row : varEsEquivalence(dist, opt.p, opt.ns, opt.momentOrder,
                                            opt.grid)) {
      w.row({opt.p, static_cast<std::int64_t>(row.n), row.lowerRatio,
             row.upperRatio});
    }
    return 0;
  }
  throw CLI::ValidationError("--measure must be var|tvar|convex|ratio|equiv");
}

int runVerify(const Options& opt) {
  verify::Suite suite;
  if (opt.suite == "residual") {
    suite = verify::Suite::Residual;
  } else if (opt.suite == "sampler") {
    suite = verify::Suite::Sampler;
  } else if (opt.suite == "bounds") {
    suite = verify::Suite::Bounds;
  } else if (opt.suite == "all") {
    suite = verify::Suite::All;
  } else {
    throw CLI::ValidationError("--suite must be residual|sampler|bounds|all");
  }
  verify::SuiteOptions so;
  so.seed = opt.seed;
  if (opt.budget == "small") {
    so.budget = 20000;
  } else if (opt.budget == "medium") {
    so.budget = 100000;
  } else if (opt.budget == "large") {
    so.budget = 400000;
  } else {
    so.budget = std::strtoull(opt.budget.c_str(), nullptr, 10);
    if (so.budget == 0) throw CLI::ValidationError("--budget must be a positive count or small|medium|large");
  }

  const auto reports = verify::runSuite(suite, so);
  Sink sink = openSink(opt.outputPath);
  std::ostringstream cfg;
  cfg << "verify|suite=" << opt.suite << "|budget=" << so.budget;
  *sink.stream << "# " << headerLine(cfg.str(), opt.seed) << "\n";
  bool allPass = true;
  for (const auto& rep : reports) {
    // Runtime is dropped from files so identical configs stay byte-identical.
    *sink.stream << rep.toJsonLine(/*includeRuntime=*/false) << "\n";
    std::cerr << (rep.pass ? "[PASS] " : "[FAIL] ") << rep.test << " ("
              << rep.inputsDigest << ")\n";
    allPass = allPass && rep.pass;
  }
  return allPass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"END sequence construction, residual distributions and risk-aggregation bounds"};
  app.require_subcommand(1);
  Options opt;

  const auto addCommon = [&](CLI::App* sub, bool needsDist) {
    if (needsDist) {
      sub->add_option("--dist", opt.dist, "distribution spec, e.g. pareto:alpha=2")
          ->required();
    }
    sub->add_option("--seed", opt.seed, "RNG seed (default: ENDSEQ_SEED or built-in)");
    sub->add_option("--out", opt.out, "output format: csv|jsonl");
    sub->add_option("--output", opt.outputPath, "output file (default: stdout)");
  };

  auto* residual = app.add_subcommand("residual", "residual-transform table");
  addCommon(residual, true);
  residual->add_option("--grid", opt.grid, "grid resolution");

  auto* sample = app.add_subcommand("sample", "draw sample paths");
  addCommon(sample, true);
  sample->add_option("--scenario", opt.scenario, "end|iid|comonotone|cm");
  sample->add_option("--n", opt.n, "path length");
  sample->add_option("--reps", opt.reps, "number of paths");

  auto* compare = app.add_subcommand("compare", "variance by scenario and n");
  addCommon(compare, true);
  compare->add_option("--n", opt.ns, "aggregation sizes")->delimiter(',');
  compare->add_option("--reps", opt.reps, "replicates per estimate");

  auto* bounds = app.add_subcommand("bounds", "dependence-uncertainty bounds");
  addCommon(bounds, true);
  bounds->add_option("--p", opt.p, "confidence level");
  bounds->add_option("--n", opt.ns, "aggregation sizes")->delimiter(',');
  bounds->add_option("--grid", opt.grid, "q-grid size");
  bounds->add_option("--measure", opt.measure, "var|tvar|convex|ratio|equiv");
  bounds->add_option("--k", opt.momentOrder, "moment order for rate-heuristic grid points");
  bounds->add_option("--g", opt.gSpec, "convex function: quad:center=C|abs:center=C|stoploss:k=K");

  auto* verifyCmd = app.add_subcommand("verify", "verification suites");
  addCommon(verifyCmd, false);
  verifyCmd->add_option("--suite", opt.suite, "residual|sampler|bounds|all");
  verifyCmd->add_option("--budget", opt.budget, "sample budget: count or small|medium|large");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (residual->parsed()) return runResidual(opt);
    if (sample->parsed()) return runSample(opt);
    if (compare->parsed()) return runCompare(opt);
    if (bounds->parsed()) return runBounds(opt);
    if (verifyCmd->parsed()) return runVerify(opt);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

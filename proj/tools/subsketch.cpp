#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subsketch/subsketch.hpp"

namespace ss = subsketch;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitUnsupported = 4;

ss::Vector parse_vector(const std::string& s) {
  std::vector<double> vals;
  std::stringstream in(s);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (...) {
      throw ss::InputError("bad number in vector: '" + cell + "'");
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos)
      throw ss::InputError("bad number in vector: '" + cell + "'");
    vals.push_back(v);
  }
  if (vals.empty()) throw ss::InputError("empty vector");
  return Eigen::Map<ss::Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

struct Loaded {
  ss::StreamHeader header;
  ss::WeightedPointSet points;
  std::vector<int> labels;
};

struct CsvFlags {
  double p = 0.0;  // 0: take p from the file header (binary) or 1 (CSV)
  bool weights = false;
  bool labels = false;
};

ss::StreamReader open_stream(const std::string& path, const CsvFlags& f) {
  return ss::StreamReader(path, f.p > 0.0 ? f.p : 1.0, f.weights, f.labels);
}

double effective_p(const ss::StreamReader& r, const CsvFlags& f) {
  return f.p > 0.0 ? f.p : r.header().p();
}

Loaded load_all(const std::string& path, const CsvFlags& f) {
  ss::StreamReader r = open_stream(path, f);
  Loaded L;
  L.header = r.header();
  const auto rows = r.read_all();
  if (rows.empty()) throw ss::InputError("input has no rows");
  const int d = static_cast<int>(L.header.d);
  L.points.p = effective_p(r, f);
  L.points.points.resize(static_cast<Eigen::Index>(rows.size()), d);
  L.points.weights.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    L.points.points.row(static_cast<Eigen::Index>(i)) = rows[i].x.transpose();
    L.points.weights[static_cast<Eigen::Index>(i)] = rows[i].weight;
    L.labels.push_back(rows[i].label);
  }
  return L;
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ss::InputError("--eps must lie in (0,1)");
}

void add_csv_flags(CLI::App* app, CsvFlags& f) {
  app->add_option("--p", f.p, "Exponent p (overrides the stream header)");
  app->add_flag("--weights", f.weights, "Headerless CSV: a weight column follows the coordinates");
  app->add_flag("--labels", f.labels, "Headerless CSV: the last column is a label");
}

template <class T>
void kv(const std::string& k, const T& v) {
  std::cout << k << '=' << v << '\n';
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string input, out, mode = "additive";
  double eps = 0.1;
  std::uint64_t seed = 0;
  bool affine = false;
  CsvFlags csv;
};

void run_build(const BuildArgs& a) {
  check_eps(a.eps);
  if (a.mode != "additive" && a.mode != "multiplicative") throw ss::InputError("--mode must be additive or multiplicative");
  Loaded L = load_all(a.input, a.csv);
  if (!ss::is_integer_p(L.points.p)) throw ss::UnsupportedError("coreset construction requires integer p");
  ss::WeightedPointSet P = a.affine ? ss::lift_affine(L.points) : L.points;
  P.validate();
  ss::Rng rng(a.seed);
  const auto t0 = std::chrono::steady_clock::now();
  ss::CoresetSketch S;
  if (a.mode == "additive") {
    S = ss::build_additive(P, a.eps, rng);
  } else {
    S = ss::build_multiplicative(P, a.eps, rng);
    if (S.rank_deficient) throw ss::NumericError("input rows do not span R^d; multiplicative rounding needs full rank");
  }
  const double secs = ss::seconds_since(t0);
  ss::SketchFile f;
  f.kind = ss::SketchKind::Coreset;
  f.d = static_cast<std::uint32_t>(S.d);
  f.p = P.p;
  f.eps = a.eps;
  f.seed = a.seed;
  f.payload = S;
  ss::save_sketch(a.out, f);
  kv("kind", "coreset");
  kv("mode", a.mode);
  kv("affine", a.affine ? 1 : 0);
  kv("n", P.size());
  kv("d", S.d);
  kv("p", P.p);
  kv("eps", a.eps);
  kv("size", S.size());
  kv("rounds", S.rounds);
  kv("error_budget", S.error_budget);
  if (S.multiplicative) kv("distortion", S.distortion);
  kv("seconds", secs);
}

// ---------------------------------------------------------------------------

struct QueryArgs {
  std::string sketch, x;
  double b = 0.0;
  bool has_b = false;
};

void run_query(const QueryArgs& a) {
  const ss::SketchFile f = ss::load_sketch(a.sketch);
  ss::Vector x = parse_vector(a.x);
  kv("kind", ss::kind_name(f.kind));
  switch (f.kind) {
    case ss::SketchKind::Coreset: {
      const auto& S = std::get<ss::CoresetSketch>(f.payload);
      if (a.has_b) {
        if (x.size() + 1 != S.d) throw ss::InputError("--b needs a sketch built with --affine on d-1 columns");
        ss::Vector y(x.size() + 1);
        y.head(x.size()) = x;
        y[x.size()] = a.b;
        x = y;
      }
      const ss::SketchReport r = ss::query(S, x);
      kv("estimate", r.estimate);
      kv("mode", r.multiplicative ? "multiplicative" : "additive");
      kv("error_budget", r.additive_bound);
      break;
    }
    case ss::SketchKind::Svm:
      kv("estimate", ss::query_sketch(f, x, a.b));
      kv("mode", "additive");
      break;
    default:
      if (a.has_b) throw ss::UnsupportedError("--b applies to affine coreset and SVM sketches only");
      if (x.size() != static_cast<Eigen::Index>(f.d)) throw ss::InputError("query dimension mismatch");
      kv("estimate", ss::query_sketch(f, x));
      kv("mode", f.kind == ss::SketchKind::Region ? "additive-mean" : "additive");
      break;
  }
}

// ---------------------------------------------------------------------------

struct StreamArgs {
  std::string input, out, algo = "mr";
  double eps = 0.1;
  std::uint64_t seed = 0;
  int replicas = 1;
  CsvFlags csv;
};

void run_stream(const StreamArgs& a) {
  check_eps(a.eps);
  ss::StreamReader r = open_stream(a.input, a.csv);
  const auto& h = r.header();
  const int d = static_cast<int>(h.d);
  const double p = effective_p(r, a.csv);
  ss::SketchFile f;
  f.d = h.d;
  f.p = p;
  f.eps = a.eps;
  f.seed = a.seed;
  ss::StreamRow row;
  std::size_t rows = 0;
  const auto t0 = std::chrono::steady_clock::now();
  kv("algo", a.algo);

  if (a.algo == "mr" || a.algo == "sens") {
    if (!ss::is_integer_p(p)) throw ss::UnsupportedError("coreset streaming requires integer p");
    ss::MergeReduceOptions mo;
    mo.n_hint = h.count;
    ss::CoresetSketch S;
    std::size_t peak = 0;
    if (a.algo == "mr") {
      ss::MergeReduce mr(d, p, a.eps, a.seed, mo);
      while (r.next(row)) mr.ingest(row.x, row.weight), ++rows;
      S = mr.finalize();
      peak = mr.peak_rows();
      kv("capacity", mr.capacity());
      kv("levels", mr.levels());
    } else {
      ss::SensitivityOptions so;
      so.mr = mo;
      ss::SensitivityStream st(d, p, a.eps, a.seed, so);
      while (r.next(row)) st.ingest(row.x, row.weight), ++rows;
      S = st.finalize();
      peak = st.peak_rows();
      kv("sampled", st.sampled());
      kv("refreshes", st.refreshes());
    }
    f.kind = ss::SketchKind::Coreset;
    f.payload = S;
    kv("peak_rows", peak);
    kv("tensor_slots", 0);
    kv("size", S.size());
    kv("error_budget", S.error_budget);
  } else if (a.algo == "region" || a.algo == "region-tight") {
    if (!ss::is_integer_p(p)) throw ss::InputError("region sketch requires integer p");
    if (d < 2) throw ss::InputError("region sketch requires d >= 2");
    if (a.replicas < 1) throw ss::InputError("--replicas must be positive");
    ss::RegionOptions ro;
    ro.tight = a.algo == "region-tight";
    ro.n_hint = h.count;
    ss::RegionEnsemble ens(d, static_cast<int>(p), a.eps, a.seed, a.replicas, ro);
    while (r.next(row)) {
      ens.ingest(row.weight == 1.0 ? row.x : ss::Vector(row.x * std::pow(row.weight, 1.0 / p)));
      ++rows;
    }
    std::size_t regions = 0;
    for (const auto& s : ens.sketches()) regions += s.live_regions();
    f.kind = ss::SketchKind::Region;
    f.payload = ens.sketches();
    kv("replicas", a.replicas);
    kv("regions", regions);
    kv("tensor_slots", regions * ss::sym_dim(d, static_cast<int>(p)));
    kv("peak_rows", regions);
  } else if (a.algo == "fourier") {
    if (d != 2) throw ss::InputError("fourier sketch requires d = 2");
    const int K = ss::fourier_order(p, a.eps);
    ss::FourierSketch F(p, K);
    while (r.next(row)) F.ingest(row.x, row.weight), ++rows;
    f.kind = ss::SketchKind::Fourier;
    f.payload = F;
    kv("order", K);
    kv("tensor_slots", 2 * (K + 1));
    kv("peak_rows", 0);
  } else {
    throw ss::InputError("--algo must be one of mr, sens, region, region-tight, fourier");
  }
  ss::save_sketch(a.out, f);
  kv("rows", rows);
  kv("seconds", ss::seconds_since(t0));
}

// ---------------------------------------------------------------------------

struct SvmArgs {
  std::string input, out, sketch, theta;
  double eps = 0.1, lambda = 0.0, b = 0.0;
  std::uint64_t seed = 0;
  CsvFlags csv;
};

void run_svm_build(const SvmArgs& a) {
  check_eps(a.eps);
  ss::StreamReader r = open_stream(a.input, a.csv);
  if (!r.header().has_labels) throw ss::InputError("SVM input needs labels");
  const int d = static_cast<int>(r.header().d);
  ss::SvmBuilder b(d, a.eps, a.lambda, a.seed);
  ss::StreamRow row;
  while (r.next(row)) b.ingest(row.x, row.label);
  const ss::SvmSketch S = b.finalize();
  ss::SketchFile f;
  f.kind = ss::SketchKind::Svm;
  f.d = static_cast<std::uint32_t>(d);
  f.p = 1.0;
  f.eps = a.eps;
  f.seed = a.seed;
  f.payload = S;
  ss::save_sketch(a.out, f);
  kv("kind", "svm");
  kv("n", S.n);
  kv("n_pos", S.n_pos);
  kv("n_neg", S.n_neg);
  kv("presample", S.presample);
  kv("size", S.size());
}

void run_svm_query(const SvmArgs& a) {
  const ss::SketchFile f = ss::load_sketch(a.sketch);
  if (f.kind != ss::SketchKind::Svm) throw ss::InputError("not an SVM sketch");
  kv("estimate", ss::query_sketch(f, parse_vector(a.theta), a.b));
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string name, out;
  std::uint64_t seed = 1;
  int d = 2;
  double p = 1.0;
  std::size_t n = 0;
};

void run_experiment(const ExperimentArgs& a) {
  const std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
  ss::Report rep;
  if (a.name == "coreset-scaling") {
    if (!ss::is_integer_p(a.p)) throw ss::UnsupportedError("coreset construction requires integer p");
    rep = ss::coreset_scaling(a.d, static_cast<int>(a.p), eps_grid, a.n ? a.n : 20000, a.seed);
  } else if (a.name == "delta-scaling") {
    rep = ss::delta_scaling(a.d, static_cast<int>(a.p), {100, 316, 1000, 3162, 10000}, a.seed);
  } else if (a.name == "lambda") {
    rep = ss::lambda_report(a.d, a.p, 64);
  } else if (a.name == "svm-scaling") {
    rep = ss::svm_scaling(a.d, a.n ? a.n : 100000, eps_grid, a.seed);
  } else {
    throw ss::InputError("unknown experiment " + a.name);
  }
  ss::write_csv(rep, a.out);
  kv("experiment", a.name);
  kv("rows", rep.rows.size());
  kv("fitted_exponent", rep.fitted);
  kv("expected_exponent", rep.expected);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace sketches for weighted lp norms"};
  app.require_subcommand(1);

  BuildArgs ba;
  auto* build = app.add_subcommand("build", "Build a coreset sketch from a stream file");
  build->add_option("--input", ba.input)->required();
  build->add_option("--eps", ba.eps)->required();
  build->add_option("--mode", ba.mode);
  build->add_option("--seed", ba.seed);
  build->add_option("--out", ba.out)->required();
  build->add_flag("--affine", ba.affine, "Append a -1 column so queries take (x, b)");
  add_csv_flags(build, ba.csv);

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "Evaluate a saved sketch at x");
  query->add_option("--sketch", qa.sketch)->required();
  query->add_option("--x", qa.x)->required();
  auto* bopt = query->add_option("--b", qa.b);

  StreamArgs sa;
  auto* stream = app.add_subcommand("stream", "Single-pass sketch of a stream file");
  stream->add_option("--input", sa.input)->required();
  stream->add_option("--algo", sa.algo)->required();
  stream->add_option("--eps", sa.eps)->required();
  stream->add_option("--seed", sa.seed);
  stream->add_option("--out", sa.out)->required();
  stream->add_option("--replicas", sa.replicas, "Independent region sketches; queries take the median");
  add_csv_flags(stream, sa.csv);

  SvmArgs va;
  auto* svm = app.add_subcommand("svm", "SVM objective sketches");
  svm->require_subcommand(1);
  auto* svm_build = svm->add_subcommand("build", "Sketch labelled rows");
  svm_build->add_option("--input", va.input)->required();
  svm_build->add_option("--eps", va.eps)->required();
  svm_build->add_option("--lambda", va.lambda);
  svm_build->add_option("--seed", va.seed);
  svm_build->add_option("--out", va.out)->required();
  add_csv_flags(svm_build, va.csv);
  auto* svm_query = svm->add_subcommand("query", "Evaluate the regularized hinge objective");
  svm_query->add_option("--sketch", va.sketch)->required();
  svm_query->add_option("--theta", va.theta)->required();
  svm_query->add_option("--b", va.b);

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Scaling experiments written as CSV");
  experiment->add_option("name", ea.name, "coreset-scaling | delta-scaling | lambda | svm-scaling")->required();
  experiment->add_option("--out", ea.out)->required();
  experiment->add_option("--seed", ea.seed);
  experiment->add_option("--d", ea.d);
  experiment->add_option("--p", ea.p);
  experiment->add_option("--n", ea.n);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*build) run_build(ba);
    else if (*query) {
      qa.has_b = bopt->count() > 0;
      run_query(qa);
    } else if (*stream) run_stream(sa);
    else if (*svm_build) run_svm_build(va);
    else if (*svm_query) run_svm_query(va);
    else if (*experiment) run_experiment(ea);
  } catch (const ss::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ss::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ss::UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return kExitUnsupported;
  }
  return 0;
}

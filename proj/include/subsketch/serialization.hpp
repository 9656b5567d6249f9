#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "subsketch/coreset_engine.hpp"
#include "subsketch/fourier_sketch.hpp"
#include "subsketch/region_sketch.hpp"
#include "subsketch/svm.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

// ---------------------------------------------------------------------------
// Little-endian byte encoding, independent of the host byte order.

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const std::string& s) { buf_ += s; }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  void dvec(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void ivec(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i32(x);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : buf_(std::move(data)) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Vector vec() {
    const auto n = count(8);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }
  Matrix mat() {
    const auto r = u64();
    const auto c = u64();
    if (c != 0 && r > remaining() / 8 / c) throw InputError("truncated sketch file");
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    return m;
  }
  std::vector<double> dvec() {
    std::vector<double> v(count(8));
    for (double& x : v) x = f64();
    return v;
  }
  std::vector<int> ivec() {
    std::vector<int> v(count(4));
    for (int& x : v) x = i32();
    return v;
  }
  bool done() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw InputError("truncated sketch file");
  }
  std::size_t count(std::size_t elem) {
    const auto n = u64();
    if (n > remaining() / elem) throw InputError("truncated sketch file");
    return static_cast<std::size_t>(n);
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Stream files: "LPSS1" header followed by f64 rows, or CSV.

struct StreamHeader {
  std::uint32_t d = 0;
  std::uint32_t p_num = 1, p_den = 1;
  std::uint64_t count = 0;  // 0 = unknown
  bool has_weights = false;
  bool has_labels = false;

  double p() const { return static_cast<double>(p_num) / static_cast<double>(p_den); }
};

struct StreamRow {
  Vector x;
  double weight = 1.0;
  int label = 0;
};

inline constexpr char kStreamMagic[] = "LPSS1";

inline void write_stream(const std::string& path, const StreamHeader& h, const std::vector<StreamRow>& rows) {
  ByteWriter w;
  w.raw(std::string(kStreamMagic, 5));
  w.u32(h.d);
  w.u32(h.p_num);
  w.u32(h.p_den);
  w.u64(h.count ? h.count : rows.size());
  w.u8(static_cast<std::uint8_t>((h.has_weights ? 1 : 0) | (h.has_labels ? 2 : 0)));
  for (const auto& r : rows) {
    if (r.x.size() != static_cast<Eigen::Index>(h.d)) throw InputError("row dimension mismatch");
    for (Eigen::Index j = 0; j < r.x.size(); ++j) w.f64(r.x[j]);
    if (h.has_weights) w.f64(r.weight);
    if (h.has_labels) w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(r.label)));
  }
  write_file(path, w.bytes());
}

/// Reads a binary stream file, or a CSV file when the magic is absent.  CSV
/// columns are coordinates unless a header row names a "w"/"weight" or
/// "y"/"label" column; without a header the caller says whether trailing
/// weight and label columns are present.  For CSV, p comes from the caller.
class StreamReader {
 public:
  explicit StreamReader(const std::string& path, double csv_p = 1.0, bool csv_weights = false,
                        bool csv_labels = false)
      : in_(path, std::ios::binary) {
    if (!in_) throw InputError("cannot open " + path);
    char magic[5] = {};
    in_.read(magic, 5);
    if (in_.gcount() == 5 && std::memcmp(magic, kStreamMagic, 5) == 0) {
      binary_ = true;
      char hb[21];
      in_.read(hb, 21);
      if (in_.gcount() != 21) throw InputError("truncated stream header");
      ByteReader br(std::string(hb, 21));
      h_.d = br.u32();
      h_.p_num = br.u32();
      h_.p_den = br.u32();
      h_.count = br.u64();
      const auto flags = br.u8();
      h_.has_weights = flags & 1;
      h_.has_labels = flags & 2;
      if (h_.d == 0) throw InputError("stream dimension must be positive");
      if (h_.p_den == 0 || h_.p_num == 0) throw InputError("stream p must be positive");
    } else {
      in_.clear();
      in_.seekg(0);
      init_csv(csv_p, csv_weights, csv_labels);
    }
  }

  const StreamHeader& header() const { return h_; }
  bool binary() const { return binary_; }

  bool next(StreamRow& row) {
    return binary_ ? next_binary(row) : next_csv(row);
  }

  std::vector<StreamRow> read_all() {
    std::vector<StreamRow> out;
    StreamRow r;
    while (next(r)) out.push_back(r);
    return out;
  }

 private:
  std::ifstream in_;
  StreamHeader h_;
  bool binary_ = false;
  int wcol_ = -1, ycol_ = -1, ncols_ = 0;
  std::vector<std::string> pending_;
  std::uint64_t read_ = 0;

  bool next_binary(StreamRow& row) {
    if (h_.count && read_ >= h_.count) return false;
    const std::size_t bytes = 8 * h_.d + (h_.has_weights ? 8 : 0) + (h_.has_labels ? 1 : 0);
    std::string buf(bytes, '\0');
    in_.read(buf.data(), static_cast<std::streamsize>(bytes));
    if (in_.gcount() == 0) {
      if (h_.count) throw InputError("stream ended before declared count");
      return false;
    }
    if (static_cast<std::size_t>(in_.gcount()) != bytes) throw InputError("truncated stream row");
    ByteReader br(std::move(buf));
    row.x.resize(h_.d);
    for (std::uint32_t j = 0; j < h_.d; ++j) row.x[j] = br.f64();
    row.weight = h_.has_weights ? br.f64() : 1.0;
    row.label = h_.has_labels ? static_cast<std::int8_t>(br.u8()) : 0;
    check(row);
    ++read_;
    return true;
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    return out;
  }

  static bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    std::size_t used = 0;
    try {
      v = std::stod(s, &used);
    } catch (...) {
      return false;
    }
    return used == s.size();
  }

  bool next_line(std::vector<std::string>& cells) {
    std::string line;
    while (std::getline(in_, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
      cells = split(line);
      return true;
    }
    return false;
  }

  void init_csv(double p, bool weights, bool labels) {
    if (!(p > 0.0)) throw InputError("p must be positive");
    std::vector<std::string> first;
    if (!next_line(first)) throw InputError("empty input");
    double tmp;
    if (!parse_double(first[0], tmp)) {
      for (std::size_t j = 0; j < first.size(); ++j) {
        if (first[j] == "w" || first[j] == "weight") wcol_ = static_cast<int>(j);
        if (first[j] == "y" || first[j] == "label") ycol_ = static_cast<int>(j);
      }
      ncols_ = static_cast<int>(first.size());
    } else {
      ncols_ = static_cast<int>(first.size());
      pending_ = first;
      if (labels) ycol_ = ncols_ - 1;
      if (weights) wcol_ = ncols_ - 1 - (labels ? 1 : 0);
    }
    const int d = ncols_ - (wcol_ >= 0) - (ycol_ >= 0);
    if (d < 1) throw InputError("CSV has no coordinate columns");
    h_.d = static_cast<std::uint32_t>(d);
    // Rational p with denominator up to 1000.
    h_.p_den = 1;
    while (h_.p_den < 1000 && std::abs(p * h_.p_den - std::round(p * h_.p_den)) > 1e-12) h_.p_den *= 10;
    h_.p_num = static_cast<std::uint32_t>(std::llround(p * h_.p_den));
    h_.has_weights = wcol_ >= 0;
    h_.has_labels = ycol_ >= 0;
  }

  bool next_csv(StreamRow& row) {
    std::vector<std::string> cells;
    if (!pending_.empty()) {
      cells.swap(pending_);
    } else if (!next_line(cells)) {
      return false;
    }
    if (static_cast<int>(cells.size()) != ncols_) throw InputError("CSV row has wrong column count");
    row.x.resize(h_.d);
    row.weight = 1.0;
    row.label = 0;
    Eigen::Index k = 0;
    for (int j = 0; j < ncols_; ++j) {
      double v;
      if (!parse_double(cells[static_cast<std::size_t>(j)], v)) throw InputError("non-numeric CSV cell");
      if (j == wcol_) row.weight = v;
      else if (j == ycol_) row.label = static_cast<int>(std::lround(v));
      else row.x[k++] = v;
    }
    check(row);
    ++read_;
    return true;
  }

  void check(const StreamRow& row) const {
    if (!row.x.allFinite() || !std::isfinite(row.weight)) throw InputError("non-finite value in stream");
    if (row.weight < 0.0) throw InputError("negative weight in stream");
  }
};

// ---------------------------------------------------------------------------
// Sketch files.

enum class SketchKind : std::uint8_t { Coreset = 0, Region = 1, Fourier = 2, Svm = 3 };

inline const char* kind_name(SketchKind k) {
  switch (k) {
    case SketchKind::Coreset: return "coreset";
    case SketchKind::Region: return "region";
    case SketchKind::Fourier: return "fourier";
    case SketchKind::Svm: return "svm";
  }
  return "unknown";
}

struct SketchFile {
  SketchKind kind = SketchKind::Coreset;
  std::uint32_t d = 0;
  double p = 1.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::variant<CoresetSketch, std::vector<RegionSketch>, FourierSketch, SvmSketch> payload;
};

inline constexpr char kSketchMagic[] = "LPSK";
inline constexpr std::uint32_t kSketchVersion = 1;

namespace detail {

inline void put_coreset(ByteWriter& w, const CoresetSketch& S) {
  w.u32(static_cast<std::uint32_t>(S.d));
  w.f64(S.p);
  w.f64(S.error_budget);
  w.u8(static_cast<std::uint8_t>(S.loss));
  w.u8(S.multiplicative ? 1 : 0);
  w.f64(S.distortion);
  w.f64(S.mass_ratio);
  w.u32(static_cast<std::uint32_t>(S.rounds));
  w.u8(S.transform ? 1 : 0);
  if (S.transform) w.mat(*S.transform);
  w.mat(S.base.points);
  w.vec(S.base.weights);
}

inline CoresetSketch get_coreset(ByteReader& r) {
  CoresetSketch S;
  S.d = static_cast<int>(r.u32());
  S.p = r.f64();
  S.error_budget = r.f64();
  const auto loss = r.u8();
  if (loss > 1) throw InputError("unknown loss tag");
  S.loss = static_cast<Loss>(loss);
  S.multiplicative = r.u8() != 0;
  S.distortion = r.f64();
  S.mass_ratio = r.f64();
  S.rounds = static_cast<int>(r.u32());
  if (r.u8()) S.transform = r.mat();
  S.base.p = S.p;
  S.base.points = r.mat();
  S.base.weights = r.vec();
  if (S.base.points.rows() != S.base.weights.size() ||
      (S.base.points.rows() > 0 && S.base.points.cols() != S.d))
    throw InputError("inconsistent coreset payload");
  return S;
}

inline void put_region(ByteWriter& w, const RegionSketch& R) {
  const auto& o = R.options();
  w.u64(R.seed());
  w.u8(o.tight ? 1 : 0);
  w.u64(o.n_hint);
  w.f64(o.min_radius);
  const auto st = R.state();
  w.u64(st.n_seen);
  w.u64(st.ignored);
  w.u64(st.slot_updates);
  w.ivec(st.active);
  w.u64(st.regions.size());
  for (const auto& g : st.regions) {
    w.u64(g.count);
    w.vec(g.q);
    w.vec(g.sample);
    w.vec(g.center);
    w.f64(g.radius);
    w.f64(g.nominal);
    w.i32(g.level);
    w.u8(g.subdivided ? 1 : 0);
    w.mat(g.child_centers);
    w.ivec(g.children);
  }
}

inline RegionSketch get_region(ByteReader& r, int d, int p, double eps) {
  const auto seed = r.u64();
  RegionOptions o;
  o.tight = r.u8() != 0;
  o.n_hint = r.u64();
  o.min_radius = r.f64();
  RegionSketch R(d, p, eps, seed, o);
  RegionSketch::State st;
  st.n_seen = r.u64();
  st.ignored = r.u64();
  st.slot_updates = r.u64();
  st.active = r.ivec();
  const auto nreg = r.u64();
  if (nreg > r.remaining()) throw InputError("truncated sketch file");
  for (std::uint64_t i = 0; i < nreg; ++i) {
    Region g;
    g.count = r.u64();
    g.q = r.vec();
    g.sample = r.vec();
    g.center = r.vec();
    g.radius = r.f64();
    g.nominal = r.f64();
    g.level = r.i32();
    g.subdivided = r.u8() != 0;
    g.child_centers = r.mat();
    g.children = r.ivec();
    if (g.sample.size() != d || g.center.size() != d) throw InputError("inconsistent region payload");
    st.regions.push_back(std::move(g));
  }
  R.restore(std::move(st));
  return R;
}

}  // namespace detail

inline std::string sketch_to_bytes(const SketchFile& f) {
  ByteWriter w;
  w.raw(std::string(kSketchMagic, 4));
  w.u32(kSketchVersion);
  w.u8(static_cast<std::uint8_t>(f.kind));
  w.u32(f.d);
  w.f64(f.p);
  w.f64(f.eps);
  w.u64(f.seed);
  switch (f.kind) {
    case SketchKind::Coreset:
      detail::put_coreset(w, std::get<CoresetSketch>(f.payload));
      break;
    case SketchKind::Region: {
      const auto& reps = std::get<std::vector<RegionSketch>>(f.payload);
      w.u64(reps.size());
      for (const auto& R : reps) detail::put_region(w, R);
      break;
    }
    case SketchKind::Fourier: {
      const auto& F = std::get<FourierSketch>(f.payload);
      w.f64(F.p());
      w.u32(static_cast<std::uint32_t>(F.order()));
      w.f64(F.total());
      w.f64(F.scale());
      w.dvec(F.cos_moments());
      w.dvec(F.sin_moments());
      w.dvec(F.lambdas());
      break;
    }
    case SketchKind::Svm: {
      const auto& S = std::get<SvmSketch>(f.payload);
      w.u32(static_cast<std::uint32_t>(S.d));
      w.f64(S.lambda);
      w.f64(S.eps);
      w.u64(S.n);
      w.u64(S.n_pos);
      w.u64(S.n_neg);
      w.u64(S.presample);
      w.u64(S.pos.count);
      detail::put_coreset(w, S.pos.core);
      w.u64(S.neg.count);
      detail::put_coreset(w, S.neg.core);
      break;
    }
  }
  return w.bytes();
}

inline SketchFile sketch_from_bytes(std::string bytes) {
  ByteReader r(std::move(bytes));
  if (r.raw(4) != std::string(kSketchMagic, 4)) throw InputError("not a sketch file");
  const auto version = r.u32();
  if (version != kSketchVersion) throw UnsupportedError("unsupported sketch file version");
  SketchFile f;
  const auto kind = r.u8();
  if (kind > 3) throw InputError("unknown sketch kind");
  f.kind = static_cast<SketchKind>(kind);
  f.d = r.u32();
  f.p = r.f64();
  f.eps = r.f64();
  f.seed = r.u64();
  switch (f.kind) {
    case SketchKind::Coreset:
      f.payload = detail::get_coreset(r);
      break;
    case SketchKind::Region: {
      const auto n = r.u64();
      if (n > r.remaining()) throw InputError("truncated sketch file");
      std::vector<RegionSketch> reps;
      for (std::uint64_t i = 0; i < n; ++i)
        reps.push_back(detail::get_region(r, static_cast<int>(f.d), static_cast<int>(f.p), f.eps));
      f.payload = std::move(reps);
      break;
    }
    case SketchKind::Fourier: {
      const double p = r.f64();
      const auto K = static_cast<int>(r.u32());
      const double total = r.f64();
      const double scale = r.f64();
      auto C = r.dvec();
      auto S = r.dvec();
      auto lam = r.dvec();
      const auto len = static_cast<std::size_t>(K + 1);
      if (C.size() != len || S.size() != len || lam.size() != len)
        throw InputError("inconsistent Fourier payload");
      FourierSketch F;
      F.restore(p, K, std::move(C), std::move(S), std::move(lam), scale, total);
      f.payload = std::move(F);
      break;
    }
    case SketchKind::Svm: {
      SvmSketch S;
      S.d = static_cast<int>(r.u32());
      S.lambda = r.f64();
      S.eps = r.f64();
      S.n = r.u64();
      S.n_pos = r.u64();
      S.n_neg = r.u64();
      S.presample = r.u64();
      S.pos.count = r.u64();
      S.pos.core = detail::get_coreset(r);
      S.neg.count = r.u64();
      S.neg.core = detail::get_coreset(r);
      f.payload = std::move(S);
      break;
    }
  }
  if (!r.done()) throw InputError("trailing bytes in sketch file");
  return f;
}

inline void save_sketch(const std::string& path, const SketchFile& f) { write_file(path, sketch_to_bytes(f)); }
inline SketchFile load_sketch(const std::string& path) { return sketch_from_bytes(read_file(path)); }

/// Query any sketch kind.  Coreset and Fourier return Σ-form values; region
/// returns the per-row mean; SVM expects x = (θ, b) with b taken separately.
inline double query_sketch(const SketchFile& f, const Vector& x, double b = 0.0) {
  switch (f.kind) {
    case SketchKind::Coreset: return query(std::get<CoresetSketch>(f.payload), x).estimate;
    case SketchKind::Region: return region_query_forall(std::get<std::vector<RegionSketch>>(f.payload), x);
    case SketchKind::Fourier: return std::get<FourierSketch>(f.payload).query(x);
    case SketchKind::Svm: return svm_query(std::get<SvmSketch>(f.payload), x, b);
  }
  return 0.0;
}

}  // namespace subsketch

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "subsketch/experiments.hpp"
#include "subsketch/serialization.hpp"

using namespace subsketch;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("subsketch_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::vector<Vector> probes(int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> out;
  for (int t = 0; t < 50; ++t) out.push_back(random_unit(d, rng));
  return out;
}

void expect_same_queries(const SketchFile& a, const SketchFile& b, double off = 0.0) {
  for (const auto& x : probes(static_cast<int>(a.d), 3)) EXPECT_EQ(query_sketch(a, x, off), query_sketch(b, x, off));
}

}  // namespace

TEST(StreamFile, BinaryRoundTrip) {
  const auto path = temp_path("stream.bin");
  StreamHeader h;
  h.d = 3;
  h.p_num = 3;
  h.p_den = 2;
  h.has_weights = true;
  h.has_labels = true;
  std::vector<StreamRow> rows;
  Rng rng(1);
  for (int i = 0; i < 25; ++i) rows.push_back({random_unit(3, rng), 0.5 + i, i % 2 ? 1 : -1});
  write_stream(path, h, rows);
  StreamReader rd(path);
  EXPECT_TRUE(rd.binary());
  EXPECT_EQ(rd.header().d, 3u);
  EXPECT_EQ(rd.header().p(), 1.5);
  EXPECT_EQ(rd.header().count, 25u);
  auto back = rd.read_all();
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].x, rows[i].x);
    EXPECT_EQ(back[i].weight, rows[i].weight);
    EXPECT_EQ(back[i].label, rows[i].label);
  }
  std::remove(path.c_str());
}

TEST(StreamFile, TruncatedBinaryIsRejected) {
  const auto path = temp_path("trunc.bin");
  StreamHeader h;
  h.d = 2;
  std::vector<StreamRow> rows(4, StreamRow{Vector::Ones(2), 1.0, 0});
  write_stream(path, h, rows);
  auto bytes = read_file(path);
  write_file(path, bytes.substr(0, bytes.size() - 3));
  StreamReader rd(path);
  EXPECT_THROW(rd.read_all(), InputError);
  write_file(path, bytes.substr(0, 10));
  EXPECT_THROW(StreamReader{path}, InputError);
  write_file(path, bytes.substr(0, bytes.size() - 16));
  StreamReader short_count(path);
  EXPECT_THROW(short_count.read_all(), InputError);
  std::remove(path.c_str());
}

TEST(StreamFile, CsvWithAndWithoutHeader) {
  const auto path = temp_path("rows.csv");
  write_text(path, "x1,x2,w,y\n1,2,0.5,1\n# comment\n\n-3,4,2,-1\n");
  StreamReader a(path, 2.0);
  EXPECT_FALSE(a.binary());
  EXPECT_EQ(a.header().d, 2u);
  EXPECT_EQ(a.header().p(), 2.0);
  auto ra = a.read_all();
  ASSERT_EQ(ra.size(), 2u);
  EXPECT_EQ(ra[1].x[0], -3.0);
  EXPECT_EQ(ra[1].weight, 2.0);
  EXPECT_EQ(ra[1].label, -1);

  write_text(path, "1,2,0.5\n3,4,1.5\n");
  StreamReader b(path, 1.5, true, false);
  EXPECT_EQ(b.header().d, 2u);
  EXPECT_EQ(b.header().p_num, 15u);
  EXPECT_EQ(b.header().p_den, 10u);
  auto rb = b.read_all();
  EXPECT_EQ(rb[1].weight, 1.5);
  StreamReader c(path);
  EXPECT_EQ(c.header().d, 3u);

  write_text(path, "1,2\n3\n");
  StreamReader bad(path);
  EXPECT_THROW(bad.read_all(), InputError);
  write_text(path, "1,abc\n");
  StreamReader nonnum(path);
  EXPECT_THROW(nonnum.read_all(), InputError);
  write_text(path, "1,nan\n");
  StreamReader nf(path);
  EXPECT_THROW(nf.read_all(), InputError);
  write_text(path, "");
  EXPECT_THROW(StreamReader{path}, InputError);
  EXPECT_THROW(StreamReader{temp_path("missing.csv")}, InputError);
  std::remove(path.c_str());
}

TEST(SketchFile, CoresetRoundTrip) {
  Rng rng(2);
  Matrix A(3000, 2);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  SketchFile f;
  f.kind = SketchKind::Coreset;
  f.d = 2;
  f.p = 1.0;
  f.eps = 0.1;
  f.seed = 4;
  f.payload = build_multiplicative(WeightedPointSet::uniform(A, 1.0), 0.1, rng);
  const auto bytes = sketch_to_bytes(f);
  auto back = sketch_from_bytes(bytes);
  EXPECT_EQ(back.kind, f.kind);
  EXPECT_EQ(back.seed, 4u);
  expect_same_queries(f, back);
  EXPECT_EQ(sketch_to_bytes(back), bytes);
}

TEST(SketchFile, RegionRoundTrip) {
  Rng rng(3);
  Matrix A = sphere_points(2, 2000, rng);
  RegionEnsemble ens(2, 2, 0.2, 5, 3);
  for (Eigen::Index i = 0; i < A.rows(); ++i) ens.ingest(A.row(i).transpose());
  ens.ingest(Vector::Zero(2));
  SketchFile f;
  f.kind = SketchKind::Region;
  f.d = 2;
  f.p = 2;
  f.eps = 0.2;
  f.seed = 5;
  f.payload = ens.sketches();
  const auto path = temp_path("region.lpsk");
  save_sketch(path, f);
  auto back = load_sketch(path);
  expect_same_queries(f, back);
  const auto& reps = std::get<std::vector<RegionSketch>>(back.payload);
  ASSERT_EQ(reps.size(), 3u);
  EXPECT_EQ(reps[0].ignored(), 1u);
  // Reservoir draws are not persisted; tensor sums and counts keep up.
  auto live = ens.sketches();
  auto restored = reps;
  for (Eigen::Index i = 0; i < 200; ++i) {
    live[0].ingest(A.row(i).transpose());
    restored[0].ingest(A.row(i).transpose());
  }
  ASSERT_EQ(live[0].regions().size(), restored[0].regions().size());
  for (std::size_t g = 0; g < live[0].regions().size(); ++g) {
    EXPECT_EQ(live[0].regions()[g].count, restored[0].regions()[g].count);
    EXPECT_EQ(live[0].regions()[g].q, restored[0].regions()[g].q);
  }
  std::remove(path.c_str());
}

TEST(SketchFile, FourierAndSvmRoundTrip) {
  Rng rng(4);
  Matrix A = sphere_points(2, 500, rng);
  FourierSketch F(1.0, fourier_order(1.0, 0.1));
  for (Eigen::Index i = 0; i < A.rows(); ++i) F.ingest(A.row(i).transpose(), 0.5);
  SketchFile f;
  f.kind = SketchKind::Fourier;
  f.d = 2;
  f.eps = 0.1;
  f.payload = F;
  expect_same_queries(f, sketch_from_bytes(sketch_to_bytes(f)));

  std::vector<int> y;
  for (Eigen::Index i = 0; i < A.rows(); ++i) y.push_back(A(i, 1) > 0 ? 1 : -1);
  SketchFile s;
  s.kind = SketchKind::Svm;
  s.d = 2;
  s.eps = 0.2;
  s.payload = svm_build(A, y, 0.2, 0.1, 3);
  auto back = sketch_from_bytes(sketch_to_bytes(s));
  expect_same_queries(s, back, 0.3);
  EXPECT_EQ(std::get<SvmSketch>(back.payload).n, 500u);
}

TEST(SketchFile, MalformedBytesAreRejected) {
  SketchFile f;
  f.kind = SketchKind::Coreset;
  f.d = 2;
  CoresetSketch S;
  S.d = 2;
  S.base = WeightedPointSet::uniform(Matrix::Identity(2, 2), 1.0);
  f.payload = S;
  const auto bytes = sketch_to_bytes(f);
  EXPECT_NO_THROW(sketch_from_bytes(bytes));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(sketch_from_bytes(bad_magic), InputError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(sketch_from_bytes(bad_version), UnsupportedError);
  EXPECT_THROW(sketch_from_bytes(bytes + "x"), InputError);
  for (std::size_t cut : {3u, 10u, 30u}) EXPECT_THROW(sketch_from_bytes(bytes.substr(0, cut)), InputError);
  EXPECT_THROW(sketch_from_bytes(bytes.substr(0, bytes.size() - 1)), InputError);
}

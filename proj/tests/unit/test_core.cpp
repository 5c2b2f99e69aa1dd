#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace bgsindy;
using bgsindy::testing::make_dataset_1d;
using bgsindy::testing::make_dataset_2d;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("bgsindy_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset two_field_dataset() {
  Dataset ds = make_dataset_2d(Axis{-1.0, 0.25, 8}, Axis{0.0, 0.5, 5}, Axis{0.0, 0.01, 6},
                               [](double x, double y, double t) { return std::sin(x) * std::cos(y) + t / 3.0; });
  std::vector<double> v(ds.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + static_cast<double>(i)) - 1e-300;
  ds.add_field("v", BoundaryKind::dirichlet_homogeneous, std::move(v));
  ds.metadata()["note"] = "round trip";
  return ds;
}

} // namespace

TEST(Dataset, RejectsShortAxesAndBadSpacing) {
  EXPECT_THROW(Dataset({Axis{0.0, 1.0, 3}}, Axis{0.0, 1.0, 4}), ConfigError);
  EXPECT_THROW(Dataset({Axis{0.0, 0.0, 8}}, Axis{0.0, 1.0, 4}), ConfigError);
  EXPECT_THROW(Dataset({Axis{0.0, 1.0, 8}}, Axis{0.0, -1.0, 4}), ConfigError);
}

TEST(Dataset, RejectsWrongShapeAndNonFiniteValues) {
  Dataset ds({Axis{0.0, 1.0, 4}}, Axis{0.0, 1.0, 4});
  EXPECT_THROW(ds.add_field("u", BoundaryKind::periodic, std::vector<double>(15, 0.0)), ConfigError);
  std::vector<double> v(16, 0.0);
  v[3] = std::nan("");
  EXPECT_THROW(ds.add_field("u", BoundaryKind::periodic, v), NumericalError);
  v[3] = INFINITY;
  EXPECT_THROW(ds.add_field("u", BoundaryKind::periodic, v), NumericalError);
}

TEST(Dataset, FlatIndexPutsTimeFastest) {
  Dataset ds({Axis{0.0, 1.0, 5}, Axis{0.0, 1.0, 4}}, Axis{0.0, 1.0, 6});
  EXPECT_EQ(ds.flat_index(0, 1), 1u);
  EXPECT_EQ(ds.flat_index(1, 0), 6u);
  const std::vector<std::size_t> idx{2, 3, 4};
  const auto flat = ds.ravel(idx);
  EXPECT_EQ(ds.unravel(flat), idx);
}

TEST(DatasetIo, RoundTripIsBitExact) {
  const auto dir = temp_dir("roundtrip");
  const Dataset ds = two_field_dataset();
  save_dataset(ds, dir / "sample");
  ASSERT_TRUE(fs::exists(dir / "sample.json"));
  ASSERT_TRUE(fs::exists(dir / "sample.bin"));
  const Dataset back = load_dataset(dir / "sample.json");
  EXPECT_EQ(back.space_axes(), ds.space_axes());
  EXPECT_EQ(back.time_axis(), ds.time_axis());
  EXPECT_EQ(back.metadata(), ds.metadata());
  ASSERT_EQ(back.field_names(), ds.field_names());
  for (const auto& f : ds.fields()) {
    const auto& g = back.field(f.name);
    EXPECT_EQ(g.boundary, f.boundary);
    ASSERT_EQ(g.values.size(), f.values.size());
    EXPECT_EQ(std::memcmp(g.values.data(), f.values.data(), f.values.size() * sizeof(double)), 0);
  }
}

TEST(DatasetIo, TruncatedPayloadIsAShapeMismatch) {
  const auto dir = temp_dir("truncated");
  save_dataset(two_field_dataset(), dir / "d");
  fs::resize_file(dir / "d.bin", fs::file_size(dir / "d.bin") - 8);
  try {
    (void)load_dataset(dir / "d");
    FAIL() << "expected a load failure";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, MalformedHeaderAndNonFinitePayloadFail) {
  const auto dir = temp_dir("malformed");
  save_dataset(two_field_dataset(), dir / "d");
  {
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW((void)load_dataset(dir / "bad"), ConfigError);
  }
  {
    std::fstream bin(dir / "d.bin", std::ios::in | std::ios::out | std::ios::binary);
    const double nan = std::nan("");
    bin.write(reinterpret_cast<const char*>(&nan), sizeof nan);
  }
  EXPECT_THROW((void)load_dataset(dir / "d"), NumericalError);
  EXPECT_THROW((void)load_dataset(dir / "missing"), ConfigError);
}

TEST(DatasetIo, PayloadIsLittleEndianRowMajor) {
  const auto dir = temp_dir("layout");
  Dataset ds({Axis{0.0, 1.0, 4}}, Axis{0.0, 1.0, 4});
  std::vector<double> v(16);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) + 0.5;
  ds.add_field("u", BoundaryKind::periodic, v);
  save_dataset(ds, dir / "d");
  std::ifstream bin(dir / "d.bin", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), {});
  ASSERT_EQ(bytes.size(), 16u * 8u);
  // 1.5 = 0x3FF8000000000000; the little-endian encoding ends in F8 3F.
  EXPECT_EQ(bytes[8 + 7], 0x3F);
  EXPECT_EQ(bytes[8 + 6], 0xF8);
  const auto header = nlohmann::json::parse(std::ifstream(dir / "d.json"));
  EXPECT_EQ(header.at("dtype"), "f64le");
  EXPECT_EQ(header.at("order"), "row-major");
  EXPECT_TRUE(header.contains("axes") && header.contains("fields") && header.contains("boundary") &&
              header.contains("metadata"));
}

TEST(Benchmarks, KdvDatasetIs260By3001) {
  const Dataset ds = solve_kdv(default_benchmark_config("kdv"));
  EXPECT_EQ(ds.shape(), (std::vector<std::size_t>{260, 3001}));
  EXPECT_DOUBLE_EQ(ds.time_axis().spacing, 1e-3);
  EXPECT_NEAR(ds.time_axis().coordinate(3000), 3.0, 1e-12);
  EXPECT_EQ(ds.field("u").boundary, BoundaryKind::dirichlet_homogeneous);
}

TEST(Subsample, AllIsTheIdentity) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 1.0, 7}, Axis{0.0, 1.0, 5}, [](double x, double t) { return x + t; });
  const auto s = subsample(ds, ds.size(), SampleStrategy::all, 0);
  ASSERT_EQ(s.size(), ds.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.indices[i], i);
}

TEST(Subsample, SameSeedSameIndicesOnKdvGrid) {
  const Dataset ds({Axis{0.0, 2.0 / 259.0, 260}}, Axis{0.0, 1e-3, 3001});
  for (auto strategy : {SampleStrategy::uniform_random, SampleStrategy::latin_hypercube}) {
    const auto a = subsample(ds, 1000, strategy, 42);
    const auto b = subsample(ds, 1000, strategy, 42);
    const auto c = subsample(ds, 1000, strategy, 43);
    EXPECT_EQ(a.indices, b.indices);
    EXPECT_NE(a.indices, c.indices);
  }
}

TEST(Subsample, UniformDrawsDistinctInRangeIndices) {
  const Dataset ds({Axis{0.0, 1.0, 30}}, Axis{0.0, 1.0, 20});
  const auto s = subsample(ds, 500, SampleStrategy::uniform_random, 7);
  const std::set<std::size_t> unique(s.indices.begin(), s.indices.end());
  EXPECT_EQ(unique.size(), 500u);
  EXPECT_LT(*unique.rbegin(), ds.size());
}

TEST(Subsample, LatinHypercubeHasOnePointPerStratum) {
  // 100 x 100 grid (space x time), n = 10: each 10-wide band of each axis
  // must hold exactly one sample.
  const Dataset ds({Axis{0.0, 1.0, 100}}, Axis{0.0, 1.0, 100});
  for (std::uint64_t seed : {0u, 1u, 2u, 99u}) {
    const auto s = subsample(ds, 10, SampleStrategy::latin_hypercube, seed);
    ASSERT_EQ(s.size(), 10u);
    std::vector<int> xs(10, 0), ts(10, 0);
    for (auto flat : s.indices) {
      const auto idx = ds.unravel(flat);
      ++xs[idx[0] / 10];
      ++ts[idx[1] / 10];
    }
    for (int k = 0; k < 10; ++k) {
      EXPECT_EQ(xs[k], 1) << "seed " << seed << " x band " << k;
      EXPECT_EQ(ts[k], 1) << "seed " << seed << " t band " << k;
    }
  }
}

TEST(Subsample, LatinHypercubeResolvesCollisions) {
  // More samples than points per axis forces snapping collisions.
  const Dataset ds({Axis{0.0, 1.0, 6}}, Axis{0.0, 1.0, 5});
  const auto s = subsample(ds, 30, SampleStrategy::latin_hypercube, 3);
  const std::set<std::size_t> unique(s.indices.begin(), s.indices.end());
  EXPECT_EQ(unique.size(), 30u);
}

TEST(Subsample, TooManySamplesIsAnError) {
  const Dataset ds({Axis{0.0, 1.0, 4}}, Axis{0.0, 1.0, 4});
  EXPECT_THROW((void)subsample(ds, 17, SampleStrategy::uniform_random, 0), ConfigError);
  EXPECT_THROW((void)subsample(ds, 0, SampleStrategy::uniform_random, 0), ConfigError);
}

TEST(Subsample, InteriorBoxExcludesMargins) {
  const Dataset ds({Axis{0.0, 1.0, 20}}, Axis{0.0, 1.0, 10});
  const auto box = interior_box(ds, 3, 2);
  const auto s = subsample(ds, 14 * 6, SampleStrategy::all, 0, box);
  EXPECT_EQ(s.size(), 84u);
  for (auto flat : s.indices) {
    const auto idx = ds.unravel(flat);
    EXPECT_GE(idx[0], 3u);
    EXPECT_LT(idx[0], 17u);
    EXPECT_GE(idx[1], 2u);
    EXPECT_LT(idx[1], 8u);
  }
  EXPECT_THROW((void)interior_box(ds, 10, 0), ConfigError);
}

TEST(AddNoise, ZeroGammaIsIdentity) {
  const Dataset ds = two_field_dataset();
  const Dataset out = add_noise(ds, "u", 0.0, 5);
  EXPECT_EQ(out.field("u").values, ds.field("u").values);
}

TEST(AddNoise, NoiseStdMatchesGammaTimesFieldStd) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 0.01, 400}, Axis{0.0, 0.01, 300},
                                     [](double x, double t) { return std::sin(3.0 * x) * std::exp(-t) + 0.3 * x; });
  const Dataset noisy = add_noise(ds, "u", 0.25, 11);
  const auto& a = ds.field("u").values;
  const auto& b = noisy.field("u").values;
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = b[i] - a[i];
  ASSERT_GE(diff.size(), 100000u);
  // Independent population-std oracle.
  auto pstd = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  EXPECT_NEAR(pstd(diff) / (0.25 * pstd(a)), 1.0, 0.02);
}

TEST(AddNoise, DeterministicAndLeavesOtherFieldsAlone) {
  const Dataset ds = two_field_dataset();
  const Dataset a = add_noise(ds, "u", 0.1, 3);
  const Dataset b = add_noise(ds, "u", 0.1, 3);
  EXPECT_EQ(a.field("u").values, b.field("u").values);
  EXPECT_NE(a.field("u").values, ds.field("u").values);
  EXPECT_EQ(a.field("v").values, ds.field("v").values);
  EXPECT_EQ(a.shape(), ds.shape());
  EXPECT_THROW((void)add_noise(ds, "w", 0.1, 3), ConfigError);
  EXPECT_THROW((void)add_noise(ds, "u", -0.1, 3), ConfigError);
}

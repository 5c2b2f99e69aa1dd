#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace bgsindy;
using bgsindy::testing::make_dataset_1d;
using bgsindy::testing::make_dataset_2d;

namespace {

LibrarySpec spec_1d(int p, int q) {
  LibrarySpec s;
  s.max_power = p;
  s.max_derivative = q;
  return s;
}

LibrarySpec spec_rd() {
  LibrarySpec s;
  s.kind = LibraryKind::monomial_plus_derivative;
  s.fields = {"u", "v"};
  s.max_power = 3;
  s.max_derivative = 2;
  return s;
}

TermDescriptor term(std::map<std::string, int> p, std::optional<DerivativeFactor> d = std::nullopt) {
  return TermDescriptor(std::move(p), std::move(d));
}

Library plain_library(const Eigen::MatrixXd& m) {
  Library lib;
  lib.matrix = m;
  lib.target = Eigen::VectorXd::Zero(m.rows());
  lib.target_field = "u";
  for (Eigen::Index j = 0; j < m.cols(); ++j) lib.terms.push_back(term({{"u", static_cast<int>(j)}}));
  return lib;
}

Eigen::Index svd_rank(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > 1e-10 * s(0)) ++r;
  return r;
}

} // namespace

TEST(LibraryTerms, CountsMatchTheSpecShapes) {
  EXPECT_EQ(library_terms(spec_1d(2, 4), 1).size(), 15u);
  EXPECT_EQ(library_terms(spec_1d(10, 10), 1).size(), 121u);
  const auto rd = library_terms(spec_rd(), 2);
  EXPECT_EQ(rd.size(), 20u);
  std::size_t derivs = 0;
  for (const auto& t : rd) derivs += t.derivative.has_value();
  EXPECT_EQ(derivs, 10u);
}

TEST(LibraryTerms, ConstantFirstAndOrderIsDeterministic) {
  const auto a = library_terms(spec_1d(3, 3), 1);
  EXPECT_EQ(render_term(a.front()), "1");
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(a, library_terms(spec_1d(3, 3), 1));
  const auto rd = library_terms(spec_rd(), 2);
  EXPECT_EQ(render_term(rd.front()), "1");
  EXPECT_THROW((void)library_terms(spec_1d(1, 11), 1), ConfigError);
}

TEST(RenderTerm, CanonicalNames) {
  EXPECT_EQ(render_term(term({{"u", 1}}, DerivativeFactor{"u", {1, 0}})), "u u_x");
  EXPECT_EQ(render_term(term({{"v", 3}})), "v^3");
  EXPECT_EQ(render_term(term({{"u", 0}, {"v", 3}})), "v^3");
  EXPECT_EQ(render_term(term({{"u", 5}}, DerivativeFactor{"u", {1, 0}})), "u^5 u_x");
  EXPECT_EQ(render_term(term({{"u", 2}}, DerivativeFactor{"u", {3, 0}})), "u^2 u_{xxx}");
  EXPECT_EQ(render_term(term({}, DerivativeFactor{"v", {0, 2}})), "v_yy");
  EXPECT_EQ(render_term(term({{"u", 1}, {"v", 2}})), "u v^2");
}

TEST(TermDescriptor, JsonRoundTripAndEqualityIgnoreZeroPowers) {
  const auto t = term({{"u", 2}, {"v", 0}}, DerivativeFactor{"v", {1, 1}});
  EXPECT_EQ(term_from_json(term_to_json(t)), t);
  EXPECT_EQ(t, term({{"u", 2}}, DerivativeFactor{"v", {1, 1}}));
  EXPECT_THROW(term({{"u", -1}}), ConfigError);
}

TEST(BuildLibrary, ColumnsMatchPointwiseRecomputation) {
  const double pi = std::numbers::pi;
  const Axis x{0.0, 2.0 * pi / 64.0, 64}, t{0.0, 0.01, 12};
  auto f = [](double xv, double tv) { return std::sin(xv - tv) + 0.5 * std::cos(2.0 * xv); };
  const Dataset ds = make_dataset_1d(x, t, f);
  const auto samples = subsample(ds, 200, SampleStrategy::uniform_random, 1);
  const Library lib = build_library(ds, samples, spec_1d(2, 3), "u");
  ASSERT_EQ(lib.cols(), 12u);
  ASSERT_EQ(lib.rows(), 200u);
  // Analytic derivatives as the oracle (spectral derivatives are exact here).
  auto dq = [&](int q, double xv, double tv) {
    const double ph = q * pi / 2.0;
    return std::sin(xv - tv + ph) + 0.5 * std::pow(2.0, q) * std::cos(2.0 * xv + ph);
  };
  for (std::size_t i = 0; i < lib.rows(); ++i) {
    const auto idx = ds.unravel(samples.indices[i]);
    const double xv = x.coordinate(idx[0]), tv = t.coordinate(idx[1]);
    const double u = f(xv, tv);
    for (std::size_t j = 0; j < lib.cols(); ++j) {
      const auto& term_j = lib.terms[j];
      double expect = std::pow(u, term_j.power("u"));
      if (term_j.derivative) expect *= dq(term_j.derivative->order(), xv, tv);
      EXPECT_NEAR(lib.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), expect, 1e-10)
          << render_term(term_j);
    }
    // Second-order central time derivative of sin(x - t): error O(dt^2).
    EXPECT_NEAR(lib.target(static_cast<Eigen::Index>(i)), -std::cos(xv - tv), 1e-3);
  }
}

TEST(BuildLibrary, ReactionDiffusionLibraryIn2D) {
  const double pi = std::numbers::pi;
  const Axis x{0.0, 2.0 * pi / 16.0, 16}, y{0.0, 2.0 * pi / 16.0, 16}, t{0.0, 0.1, 5};
  Dataset ds = make_dataset_2d(x, y, t, [](double xv, double yv, double tv) { return std::sin(xv) * std::cos(yv) * (1 + tv); });
  std::vector<double> v(ds.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * ds.field("u").values[i] + 0.1;
  ds.add_field("v", BoundaryKind::periodic, v);
  const auto samples = subsample(ds, 300, SampleStrategy::uniform_random, 2);
  const Library lib = build_library(ds, samples, spec_rd(), "v");
  EXPECT_EQ(lib.cols(), 20u);
  EXPECT_EQ(lib.target_field, "v");
  EXPECT_TRUE(lib.matrix.allFinite());
}

TEST(BuildLibrary, RejectsEmptySamplesAndUnknownFields) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 0.1, 16}, Axis{0.0, 0.1, 5}, [](double xv, double) { return xv; });
  EXPECT_THROW((void)build_library(ds, SampleSet{}, spec_1d(1, 1), "u"), ConfigError);
  const auto s = subsample(ds, 10, SampleStrategy::uniform_random, 0);
  EXPECT_THROW((void)build_library(ds, s, spec_1d(1, 1), "w"), ConfigError);
}

TEST(BuildLibrary, ExportsCsvWithTermHeader) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 0.1, 16}, Axis{0.0, 0.1, 5}, [](double xv, double tv) { return std::sin(xv + tv); });
  const Library lib = build_library(ds, subsample(ds, 5, SampleStrategy::uniform_random, 0), spec_1d(1, 1), "u");
  std::ostringstream os;
  export_library_csv(os, lib);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "\"1\",\"u\",\"u_x\",\"u u_x\",\"u_t\"");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(ReduceIndependent, RemovesExactlyOneCopyOfADuplicate) {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd m = bgsindy::testing::random_matrix(50, 4, rng);
  Eigen::MatrixXd dup(50, 5);
  dup << m, m.col(2);
  const Library out = reduce_independent(plain_library(dup));
  EXPECT_EQ(out.cols(), 4u);
  EXPECT_EQ(out.dropped.size(), 1u);
}

TEST(ReduceIndependent, DropsOneMemberOfADependentTriple) {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd m = bgsindy::testing::random_matrix(60, 5, rng);
  Eigen::MatrixXd aug(60, 6);
  aug << m, m.col(0) + m.col(3);
  ASSERT_EQ(svd_rank(aug), 5);
  const Library out = reduce_independent(plain_library(aug));
  EXPECT_EQ(out.cols(), 5u);
  EXPECT_EQ(svd_rank(out.matrix), 5);
  ASSERT_EQ(out.dropped.size(), 1u);
  const auto& d = out.dropped.front();
  EXPECT_TRUE(d.power("u") == 0 || d.power("u") == 3 || d.power("u") == 5) << render_term(d);
}

TEST(ReduceIndependent, FullRankIsUntouchedAndReductionIsIdempotent) {
  std::mt19937_64 rng(3);
  const Library lib = plain_library(bgsindy::testing::random_matrix(40, 7, rng));
  const Library out = reduce_independent(lib);
  EXPECT_EQ(out.terms, lib.terms);
  EXPECT_TRUE(out.dropped.empty());

  Eigen::MatrixXd aug(40, 8);
  aug << lib.matrix, 2.0 * lib.matrix.col(1) - lib.matrix.col(4);
  const Library once = reduce_independent(plain_library(aug));
  const Library twice = reduce_independent(once);
  EXPECT_EQ(twice.terms, once.terms);
  EXPECT_EQ(twice.dropped.size(), once.dropped.size());
}

TEST(ReduceIndependent, IndependentOfColumnScale) {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd m = bgsindy::testing::random_matrix(40, 6, rng);
  m.col(1) *= 1e-9;
  m.col(4) *= 1e7;
  const Library out = reduce_independent(plain_library(m));
  EXPECT_EQ(out.cols(), 6u);
}

TEST(ReduceIndependent, AllZeroColumnsIsDegenerate) {
  EXPECT_THROW((void)reduce_independent(plain_library(Eigen::MatrixXd::Zero(10, 3))), NumericalError);
}

TEST(LibrarySpecJson, RoundTripAndErrors) {
  LibrarySpec s = spec_rd();
  s.method = DiffMethod::spectral;
  s.fd_accuracy = 6;
  const auto back = library_spec_from_json(library_spec_to_json(s));
  EXPECT_EQ(back.kind, s.kind);
  EXPECT_EQ(back.fields, s.fields);
  EXPECT_EQ(back.max_power, 3);
  EXPECT_EQ(back.max_derivative, 2);
  EXPECT_EQ(back.method, s.method);
  EXPECT_EQ(back.fd_accuracy, 6);
  EXPECT_THROW((void)library_spec_from_json({{"kind", "weak-form"}}), ConfigError);
  EXPECT_THROW((void)library_spec_from_json({{"max_power", "two"}}), ConfigError);
  EXPECT_THROW((void)library_spec_from_json({{"fields", nlohmann::json::array()}}), ConfigError);
}

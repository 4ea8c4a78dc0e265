#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "planckwave/xray.hpp"

using namespace planckwave;

namespace {

ModelParams params2(double h, double beta = 1.0) {
  ModelParams p;
  p.h = h;
  p.beta = beta;
  p.alpha = beta / 2.0;
  return p;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Random segment strictly inside the unit disk.
Segment random_segment(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (;;) {
    const double t = 2 * std::numbers::pi * U(rng);
    const Eigen::VectorXd xi = vec2(std::cos(t), std::sin(t));
    const Eigen::VectorXd x = vec2(2 * U(rng) - 1, 2 * U(rng) - 1);
    if (x.norm() < 0.99 && (x + xi).norm() < 0.99) return make_segment(x, xi);
  }
}

}  // namespace

TEST(Segment, Validation) {
  EXPECT_NO_THROW(make_segment(vec2(-0.5, 0.0), vec2(1.0, 0.0)));
  EXPECT_THROW(make_segment(vec2(-0.5, 0.0), vec2(1.1, 0.0)), ConfigError);
  EXPECT_THROW(make_segment(vec2(0.2, 0.0), vec2(1.0, 0.0)), ConfigError);
  EXPECT_THROW(make_segment(vec2(-1.0, 0.0), vec2(1.0, 0.0)), ConfigError);  // endpoint on the sphere
}

TEST(XrayGram, EntryTrivialValues) {
  const double h = 0.05;
  const auto seg = make_segment(vec2(-0.5, 0.1), vec2(1.0, 0.0));
  const Eigen::VectorXd a = vec2(0.7, 0.7);
  EXPECT_LT(std::abs(xray_gram_entry(seg, a, a, h) - cplx(1.0, 0.0)), 1e-15);
  const auto seg0 = make_segment(vec2(0.0, -0.5), vec2(0.0, 1.0));
  const Eigen::VectorXd b = a + vec2(0.0, 2 * std::numbers::pi * h);
  EXPECT_LT(std::abs(xray_gram_entry(seg0, b, a, h)), 1e-14);
}

TEST(XrayGram, EntryMatchesAdaptiveQuadrature) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1.2, 1.2);
  const double h = 1.0 / 32;
  for (int k = 0; k < 40; ++k) {
    const auto seg = random_segment(rng);
    const Eigen::VectorXd xj = vec2(U(rng), U(rng)), xl = vec2(U(rng), U(rng));
    const Eigen::VectorXd eta = xj - xl;
    auto part = [&](bool imag) {
      auto f = [&](double s) {
        const double ph = seg.at(s).dot(eta) / h;
        return imag ? std::sin(ph) : std::cos(ph);
      };
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 10, 1e-12);
    };
    const cplx oracle(part(false), part(true));
    EXPECT_LT(std::abs(xray_gram_entry(seg, xj, xl, h) - oracle), 1e-9);
  }
}

TEST(XrayGram, SmallPhaseBranchIsContinuous) {
  // 1e-7 phase: series branch against long double evaluation of sin(t)/t
  for (double t : {1e-9, 3e-7, 4.9e-7, 5.1e-7, 1e-5}) {
    const long double exact = std::sin(static_cast<long double>(t)) / static_cast<long double>(t);
    EXPECT_NEAR(detail::sinc(t), static_cast<double>(exact), 4e-16);
  }
}

TEST(XrayGram, HermitianUnitDiagonalAndPsd) {
  const auto lat = build_lattice(params2(1.0 / 32));
  ASSERT_LE(lat.size(), 2048);
  std::mt19937_64 rng(2);
  const auto g = build_xray_gram(lat, random_segment(rng));
  EXPECT_LT((g.B - g.B.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index j = 0; j < lat.size(); ++j) EXPECT_EQ(g.B(j, j), cplx(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g.B, Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * g.B.trace().real());
}

TEST(XrayGram, FactoredFormReproducesGram) {
  const auto lat = build_lattice(params2(1.0 / 16));
  std::mt19937_64 rng(5);
  const auto seg = random_segment(rng);
  const auto g = build_xray_gram(lat, seg);
  const auto form = xray_quadratic_form(lat, seg);
  EXPECT_LT((form.real_gram() - g.B.real()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FStatistic, TrivialValues) {
  auto one = std::make_shared<const MomentumLattice>(MomentumLattice{params2(0.1), vec2(0.6, 0.8)});
  const auto seg = make_segment(vec2(-0.5, 0.0), vec2(1.0, 0.0));
  const auto f = make_field(one, CoefficientVector{Eigen::VectorXd::Ones(1), 0, 1.0});
  EXPECT_NEAR(f_statistic(f, seg), 1.0, 1e-15);
  EXPECT_NEAR(f_statistic_quadrature(f, seg), 1.0, 1e-12);

  Eigen::MatrixXd pair(2, 2);
  pair << 0.0, 0.0, 1.0, -1.0;  // xi_1 = (0,1), segment along x: orthogonal
  auto lat2 = std::make_shared<const MomentumLattice>(MomentumLattice{params2(0.1), pair});
  const auto f2 = make_field(lat2, CoefficientVector{Eigen::VectorXd::Ones(2), 0, 0.5});
  const auto seg2 = make_segment(vec2(-0.5, 0.37), vec2(1.0, 0.0));
  const double expected = 2.0 * std::abs(std::cos(0.37 / 0.1));
  EXPECT_NEAR(f_statistic(f2, seg2), expected, 1e-12);
  EXPECT_NEAR(f_statistic_quadrature(f2, seg2), expected, 1e-12);
}

TEST(FStatistic, GramRouteMatchesQuadratureOnRandomInstances) {
  const auto p = params2(1.0 / 32);
  auto lat = std::make_shared<const MomentumLattice>(build_lattice(p));
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto f = make_field(lat, sample_coefficients(*lat, derive_seed(3, 0, k)));
    const auto seg = random_segment(rng);
    const double a = f_statistic(f, seg), b = f_statistic_quadrature(f, seg);
    worst = std::max(worst, std::abs(a - b) / a);
  }
  EXPECT_LT(worst, 1e-7);
}

TEST(FStatistic, SecondMomentIsOne) {
  const auto lat = build_lattice(params2(1.0 / 32));
  std::mt19937_64 rng(23);
  const auto form = xray_quadratic_form(lat, random_segment(rng));
  const int draws = 10000;
  Eigen::MatrixXd C(lat.size(), draws);
  for (int d = 0; d < draws; ++d) C.col(d) = sample_coefficients(lat, derive_seed(4, 0, d)).c;
  const Eigen::VectorXd f2 = form.squared(C);
  const double mean = f2.mean();
  const double var = (f2.array() - mean).square().sum() / (draws - 1);
  const double se = std::sqrt(var / draws);
  EXPECT_NEAR(mean, 1.0, 5 * se);
  // Var(c^T Re(B) c) = 2 ||Re B||_F^2 / N^2; SE of the sample variance from the fourth moment
  const double nn = static_cast<double>(lat.size());
  const double theory = 2.0 * form.real_gram().squaredNorm() / (nn * nn);
  const double m4 = (f2.array() - mean).pow(4).mean();
  EXPECT_NEAR(var, theory, 5 * std::sqrt((m4 - var * var) / draws));
}

TEST(FStatistic, LipschitzInGramSeminorm) {
  const auto lat = build_lattice(params2(1.0 / 16));
  std::mt19937_64 rng(29);
  const auto seg = random_segment(rng);
  const auto form = xray_quadratic_form(lat, seg);
  const Eigen::MatrixXd Q = form.real_gram();
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd c = sample_coefficients(lat, derive_seed(6, 0, k)).c;
    const Eigen::VectorXd d = sample_coefficients(lat, derive_seed(6, 1, k)).c;
    Eigen::MatrixXd cd(lat.size(), 2);
    cd << c, d;
    const Eigen::VectorXd f = form.squared(cd).cwiseSqrt();
    const Eigen::VectorXd diff = c - d;
    EXPECT_LE(std::pow(f[0] - f[1], 2), diff.dot(Q * diff) * (1 + 1e-12) + 1e-15);
  }
}

TEST(Exponents, TableValues) {
  EXPECT_DOUBLE_EQ(exponent_table(2, 0.0).delta, 0.25);
  EXPECT_DOUBLE_EQ(exponent_table(2, 1.0).kappa, 0.25);
  EXPECT_DOUBLE_EQ(exponent_table(2, 0.0).kappa, 0.5);
  EXPECT_DOUBLE_EQ(exponent_table(3, 1.0).kappa, 0.5);
  EXPECT_DOUBLE_EQ(exponent_table(3, 1.0).delta, 0.5);
  EXPECT_TRUE(exponent_table(3, 1.0).log_loss);
  EXPECT_FALSE(exponent_table(4, 1.0).log_loss);
}

TEST(Exponents, TheoreticalLipschitz) {
  const double h = 1.0 / 64;
  EXPECT_NEAR(theoretical_lipschitz_F(params2(h, 0.0)), std::pow(h, -0.5), 1e-12);
  EXPECT_NEAR(theoretical_lipschitz_F(params2(h, 1.0)), std::pow(h, -0.25), 1e-12);
  ModelParams p4 = params2(h, 1.0);
  p4.n = 4;
  EXPECT_NEAR(theoretical_lipschitz_F(p4), 1.0 / h, 1e-9);
  ModelParams p3 = params2(h, 1.0);
  p3.n = 3;
  EXPECT_NEAR(theoretical_lipschitz_F(p3), std::pow(h, -0.5) * std::sqrt(std::log(1.0 / h)), 1e-12);
}

TEST(UniformGrid, SpacingExponents) {
  EXPECT_DOUBLE_EQ(xray_grid_spacing_exponent(2, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(xray_grid_spacing_exponent(2, 1.0), 0.75);
  EXPECT_DOUBLE_EQ(xray_grid_spacing_exponent(3, 1.0), 2.0);
  const auto g = uniform_grid(params2(1.0 / 64));
  EXPECT_NEAR(g.spacing, std::pow(1.0 / 64, 0.75), 1e-15);
  EXPECT_DOUBLE_EQ(g.count_exponent, 3 * 0.75);
}

TEST(UniformGrid, SegmentsAreContainedAndCounted) {
  const auto g = uniform_grid(params2(1.0 / 16));
  std::size_t seen = 0;
  g.for_each_segment([&](const Segment& s) {
    ++seen;
    EXPECT_LE(s.x.norm(), 1.0);
    EXPECT_LE(s.end().norm(), 1.0);
    EXPECT_NEAR(s.xi.norm(), 1.0, 1e-12);
  });
  EXPECT_EQ(seen, g.count);
  EXPECT_GT(g.count, 100u);
}

TEST(UniformGrid, BudgetRefusal) {
  EXPECT_THROW(uniform_grid(params2(1.0 / 64), 1e3), ConfigError);
  ModelParams p3 = params2(1.0 / 64);
  p3.n = 3;
  EXPECT_THROW(uniform_grid(p3), ConfigError);
}

TEST(UniformGrid, ScannerMatchesDirectEvaluation) {
  const auto p = params2(1.0 / 16);
  auto lat = std::make_shared<const MomentumLattice>(build_lattice(p));
  const auto g = uniform_grid(p);
  const XrayGridScanner scanner(*lat, g);
  Eigen::MatrixXd C(lat->size(), 3);
  for (int d = 0; d < 3; ++d) C.col(d) = sample_coefficients(*lat, derive_seed(8, 0, d)).c;
  std::size_t checked = 0;
  double worst = 0.0;
  scanner.scan(C, [&](Eigen::Index col, std::size_t dir, std::size_t line, int base, double f2) {
    if ((dir * 7 + line * 3 + static_cast<std::size_t>(base)) % 11 != 0) return;
    const auto& L = g.directions[dir].lines[line];
    const Segment s{L.offset + g.base_coordinate(base) * g.directions[dir].xi, g.directions[dir].xi};
    const auto f = make_field(lat, CoefficientVector{C.col(col), 0, 0.0});
    const double direct = f_statistic(f, s);
    worst = std::max(worst, std::abs(std::sqrt(f2) - direct) / direct);
    ++checked;
  });
  EXPECT_GT(checked, 100u);
  EXPECT_LT(worst, 1e-7);
}

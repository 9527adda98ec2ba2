#include <cmath>

#include <gtest/gtest.h>

#include "pfcalc/error.hpp"
#include "pfcalc/pipeline_model.hpp"
#include "support.hpp"

using namespace pfcalc;
using pfcalc::testing::brute_force_omega;
using pfcalc::testing::Gen;

namespace {

NormalizedConfusionMatrix g(double tn, double fp, double fn, double tp) {
  return NormalizedConfusionMatrix::from_rates(tn, fp, fn, tp);
}

ResolvedPipeline two_level() {
  const std::vector<double> fs{0.8, 0.5};
  const std::vector<NormalizedConfusionMatrix> gs{g(0.9, 0.1, 0.2, 0.8), g(0.9, 0.1, 0.2, 0.8)};
  return ResolvedPipeline::from_stages(fs, gs);
}

ResolvedPipeline one_level() {
  const std::vector<double> fs{0.5};
  const std::vector<NormalizedConfusionMatrix> gs{g(0.8, 0.2, 0.1, 0.9)};
  return ResolvedPipeline::from_stages(fs, gs);
}

Taxonomy example_taxonomy() {
  RawTaxonomy raw;
  raw.categories = {"A", "B", "C", "D"};
  raw.edges = {{"B", "A", 0.6}, {"C", "A", 0.3}, {"C", "B", 0.5}, {"D", "B", 0.4}};
  return Taxonomy::validate(raw);
}

void expect_near(const Matrix2& a, const Matrix2& b, double tol) {
  EXPECT_LE(max_abs_diff(a, b), tol) << "[[" << a.v00 << "," << a.v01 << "],[" << a.v10
                                     << "," << a.v11 << "]] vs [[" << b.v00 << "," << b.v01
                                     << "],[" << b.v10 << "," << b.v11 << "]]";
}

}  // namespace

TEST(PipelineModel, RootOnlyIsBaseCase) {
  const auto p = ResolvedPipeline::from_stages({}, {});
  EXPECT_EQ(omega_recursive(p).matrix(), (Matrix2{0, 0, 0, 1}));
  EXPECT_EQ(omega_closed(p).matrix(), (Matrix2{0, 0, 0, 1}));
}

TEST(PipelineModel, SingleStepFixture) {
  expect_near(omega_recursive(one_level()).matrix(), {0.40, 0.10, 0.05, 0.45}, 1e-15);
  expect_near(omega_closed(one_level()).matrix(), {0.40, 0.10, 0.05, 0.45}, 1e-15);
}

TEST(PipelineModel, TwoStepFixture) {
  const auto p = two_level();
  expect_near(omega_recursive(p.prefix(1)).matrix(), {0.18, 0.02, 0.16, 0.64}, 1e-15);
  expect_near(omega_recursive(p).matrix(), {0.566, 0.034, 0.144, 0.256}, 1e-15);
  expect_near(omega_closed(p).matrix(), {0.566, 0.034, 0.144, 0.256}, 1e-15);
}

TEST(PipelineModel, ContextSwitchAndStep) {
  const auto prev = JointMatrix::from_cells(0.18, 0.02, 0.16, 0.64);
  const auto chi = context_switch(0.5, prev);
  expect_near(chi, {0.18 + 0.08, 0.02 + 0.32, 0.08, 0.32}, 1e-15);
  expect_near(omega_step(prev, 0.5, g(0.9, 0.1, 0.2, 0.8)).matrix(),
              {0.566, 0.034, 0.144, 0.256}, 1e-15);
}

TEST(PipelineModel, RecursiveClosedAndBruteForceAgree) {
  Gen gen(11);
  for (int i = 0; i < 300; ++i) {
    const auto p = gen.pipeline(gen.below(7));
    const auto brute = brute_force_omega(p);
    expect_near(omega_recursive(p).matrix(), brute, 1e-12);
    expect_near(omega_closed(p).matrix(), brute, 1e-12);
    EXPECT_NEAR(omega_recursive(p).matrix().sum(), 1.0, 1e-12);
  }
}

TEST(PipelineModel, PsiFixture) {
  const auto p = two_level();
  const auto rec = psi(p, PsiMode::Recursive);
  const auto closed = psi(p, PsiMode::Closed);
  expect_near(rec.matrix(), {0.99, 0.01, 0.36, 0.64}, 1e-15);
  expect_near(closed.matrix(), rec.matrix(), 1e-15);
}

TEST(PipelineModel, PsiRowIsPassThroughProbability) {
  Gen gen(12);
  for (int i = 0; i < 500; ++i) {
    const auto p = gen.pipeline(1 + gen.below(8));
    double pass0 = 1.0;
    double pass1 = 1.0;
    for (const auto& gm : p.gammas()) {
      pass0 *= gm.accept(0);
      pass1 *= gm.accept(1);
    }
    const auto m = psi(p).matrix();
    EXPECT_NEAR(m.v01, pass0, 1e-14);
    EXPECT_NEAR(m.v11, pass1, 1e-14);
    EXPECT_NEAR(m.row_sum(0), 1.0, 1e-12);
    EXPECT_NEAR(m.row_sum(1), 1.0, 1e-12);
  }
}

TEST(PipelineModel, HomomorphismOnCategoryStrings) {
  const auto t = example_taxonomy();
  ClassifierProfileSet profiles(CategoryId("A"));
  profiles.set(CategoryId("B"), g(0.9, 0.1, 0.2, 0.8));
  profiles.set(CategoryId("C"), g(0.7, 0.3, 0.1, 0.9));
  profiles.set(CategoryId("D"), g(0.6, 0.4, 0.25, 0.75));
  // Arbitrary strings, not only rooted paths.
  const auto s = ids({"D", "B", "C", "A", "C"});
  const auto whole = psi(s, profiles);
  expect_near(homomorphism_map(s, profiles).matrix(), whole.matrix(), 1e-15);
  for (std::size_t cut = 0; cut <= s.size(); ++cut) {
    const std::span<const CategoryId> all(s);
    expect_near(oplus(psi(all.first(cut), profiles), psi(all.subspan(cut), profiles)).matrix(),
                whole.matrix(), 1e-15);
  }
  EXPECT_EQ(psi(std::span<const CategoryId>{}, profiles).matrix(), (Matrix2{0, 1, 0, 1}));
  EXPECT_EQ(psi(ids({"A"}), profiles).matrix(), (Matrix2{0, 1, 0, 1}));
}

TEST(PipelineModel, FactorizationFixture) {
  const auto fz = factorize(two_level());
  EXPECT_EQ(fz.eta_status, EtaStatus::Finite);
  EXPECT_NEAR(fz.eta, 0.034 / (0.6 * 0.01), 1e-12);
  EXPECT_NEAR(fz.eta, 5.666666666667, 1e-9);
  EXPECT_NEAR(fz.prior_positive, 0.4, 1e-15);
  EXPECT_NEAR(fz.prior_negative, 0.6, 1e-15);
  expect_near(fz.reconstruct().matrix(), omega_recursive(two_level()).matrix(), 1e-15);
  EXPECT_NEAR(fz.phi.fp(), fz.eta * fz.psi.fp(), 1e-15);
}

TEST(PipelineModel, FactorizationReconstructsRandomPipelines) {
  Gen gen(13);
  for (int i = 0; i < 1000; ++i) {
    const auto p = gen.pipeline(gen.below(9));
    const auto fz = factorize(p);
    expect_near(fz.reconstruct().matrix(), omega_recursive(p).matrix(), 1e-12);
    EXPECT_NEAR(fz.phi.matrix().row_sum(0), 1.0, 1e-12);
    EXPECT_NEAR(fz.phi.matrix().row_sum(1), 1.0, 1e-12);
  }
}

TEST(PipelineModel, SingleDistributionStepGivesPhiEqualPsi) {
  Gen gen(14);
  for (int i = 0; i < 200; ++i) {
    const std::size_t len = 1 + gen.below(6);
    std::vector<double> fs(len, 1.0);
    fs[0] = gen.open_unit();
    std::vector<NormalizedConfusionMatrix> gs;
    for (std::size_t k = 0; k < len; ++k) gs.push_back(gen.gamma());
    const auto fz = factorize(ResolvedPipeline::from_stages(fs, gs));
    expect_near(fz.phi.matrix(), fz.psi.matrix(), 1e-12);
  }
}

TEST(PipelineModel, ZeroFalsePositivesLeaveOmegaFinite) {
  const std::vector<double> fs{0.7, 0.4, 0.9};
  const std::vector<NormalizedConfusionMatrix> gs{g(1, 0, 0.2, 0.8), g(1, 0, 0.1, 0.9),
                                                  g(1, 0, 0.3, 0.7)};
  const auto p = ResolvedPipeline::from_stages(fs, gs);
  const auto w = omega_closed(p).matrix();
  for (double v : w.cells()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(w.v01, 0.0);
  const auto fz = factorize(p);
  EXPECT_EQ(fz.eta_status, EtaStatus::Unbounded);
  EXPECT_TRUE(std::isinf(fz.eta));
  expect_near(fz.reconstruct().matrix(), w, 1e-15);
}

TEST(PipelineModel, AllPositiveInputFlagsEta) {
  const std::vector<double> fs{1.0, 1.0};
  const std::vector<NormalizedConfusionMatrix> gs{g(0.9, 0.1, 0.2, 0.8), g(0.7, 0.3, 0.1, 0.9)};
  const auto p = ResolvedPipeline::from_stages(fs, gs);
  const auto fz = factorize(p);
  EXPECT_EQ(fz.prior_negative, 0.0);
  EXPECT_EQ(fz.eta_status, EtaStatus::ZeroNegativeMass);
  EXPECT_TRUE(std::isnan(fz.eta));
  const auto w = omega_recursive(p).matrix();
  expect_near(w, {0, 0, 1 - 0.72, 0.72}, 1e-15);
  expect_near(fz.reconstruct().matrix(), w, 1e-15);
}

TEST(PipelineModel, ExpectedConfusion) {
  const auto e = expected_confusion(1000, omega_recursive(one_level()));
  expect_near(e, {400, 100, 50, 450}, 1e-9);
  EXPECT_THROW(expected_confusion(0, JointMatrix::root()), Error);
}

TEST(ProfileSet, RootAndMissingProfiles) {
  ClassifierProfileSet profiles(CategoryId("A"));
  EXPECT_THROW(profiles.set(CategoryId("A"), g(0.9, 0.1, 0.2, 0.8)), Error);
  EXPECT_EQ(profiles.resolve(CategoryId("A")), NormalizedConfusionMatrix::neutral());
  try {
    profiles.resolve(CategoryId("B"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGamma);
  }
}

TEST(ProfileSet, OverridesApplyOnlyAlongTheirPath) {
  const auto t = example_taxonomy();
  ClassifierProfileSet profiles(CategoryId("A"));
  profiles.set(CategoryId("B"), g(0.9, 0.1, 0.2, 0.8));
  profiles.set(CategoryId("C"), g(0.7, 0.3, 0.1, 0.9));
  profiles.set(CategoryId("D"), g(0.6, 0.4, 0.25, 0.75));
  const auto special = g(0.5, 0.5, 0.5, 0.5);
  profiles.set_override("A/B/C", CategoryId("C"), special);

  EXPECT_EQ(resolve(make_pipeline(t, "A/B/C"), profiles).gamma(2), special);
  EXPECT_EQ(resolve(make_pipeline(t, "A/C"), profiles).gamma(1), g(0.7, 0.3, 0.1, 0.9));
  EXPECT_THROW(profiles.set_override("A/B", CategoryId("C"), special), Error);
  EXPECT_THROW(profiles.set_override("B/C", CategoryId("C"), special), Error);
}

TEST(ProfileSet, ResolveReportsMissingPieces) {
  const auto t = example_taxonomy();
  ClassifierProfileSet profiles(CategoryId("A"));
  profiles.set(CategoryId("B"), g(0.9, 0.1, 0.2, 0.8));
  EXPECT_NO_THROW(resolve(make_pipeline(t, "A/B"), profiles));
  EXPECT_THROW(resolve(make_pipeline(t, "A/B/D"), profiles), Error);
}

TEST(ResolvedPipelineTest, Preconditions) {
  EXPECT_THROW(ResolvedPipeline({0.5}, {NormalizedConfusionMatrix::neutral()}), Error);
  EXPECT_THROW(ResolvedPipeline({1.0, 0.5}, {NormalizedConfusionMatrix::neutral()}), Error);
  EXPECT_THROW(ResolvedPipeline({1.0, 0.5}, {g(0.9, 0.1, 0.2, 0.8), g(0.9, 0.1, 0.2, 0.8)}),
               Error);
}

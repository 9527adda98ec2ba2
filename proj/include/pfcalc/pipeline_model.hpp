#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pfcalc/matrix.hpp"
#include "pfcalc/taxonomy.hpp"

namespace pfcalc {

/// Normalized confusion matrices per category, plus optional overrides for
/// one occurrence of a category inside a specific pipeline. The root always
/// behaves as the neutral classifier and cannot be given a profile.
class ClassifierProfileSet {
public:
  explicit ClassifierProfileSet(CategoryId root);

  const CategoryId& root() const noexcept { return root_; }

  /// Throws RootProfileForbidden for the root.
  void set(const CategoryId& c, const NormalizedConfusionMatrix& gamma);
  /// `pipeline_path` is a slash-joined rooted path whose last element is
  /// `c`; the override applies to that node in every pipeline extending
  /// the path.
  void set_override(std::string_view pipeline_path, const CategoryId& c,
                    const NormalizedConfusionMatrix& gamma);

  /// Profile of a category regardless of position; throws MissingGamma.
  NormalizedConfusionMatrix resolve(const CategoryId& c) const;
  /// Profile of the last node of a rooted path, honouring overrides.
  NormalizedConfusionMatrix resolve_at(std::span<const CategoryId> rooted_path) const;

  const std::map<CategoryId, NormalizedConfusionMatrix>& classifiers() const noexcept {
    return classifiers_;
  }
  /// Keyed by the slash-joined path ending at the overridden category.
  const std::map<std::string, NormalizedConfusionMatrix>& overrides() const noexcept {
    return overrides_;
  }

private:
  CategoryId root_;
  std::map<CategoryId, NormalizedConfusionMatrix> classifiers_;
  std::map<std::string, NormalizedConfusionMatrix> overrides_;
};

/// A pipeline with every quantity the model needs: f_0 = 1 ... f_L and
/// Gamma^(0) = mu ... Gamma^(L).
class ResolvedPipeline {
public:
  ResolvedPipeline(std::vector<double> fs, std::vector<NormalizedConfusionMatrix> gammas);
  /// Builds from the non-root stages only (k = 1..L); the root is prepended.
  static ResolvedPipeline from_stages(std::span<const double> fs,
                                      std::span<const NormalizedConfusionMatrix> gammas);

  std::size_t length() const noexcept { return fs_.size() - 1; }
  std::span<const double> fs() const noexcept { return fs_; }
  std::span<const NormalizedConfusionMatrix> gammas() const noexcept { return gammas_; }
  double f(std::size_t k) const { return fs_.at(k); }
  const NormalizedConfusionMatrix& gamma(std::size_t k) const { return gammas_.at(k); }

  ResolvedPipeline prefix(std::size_t k) const;
  ResolvedPipeline with_profile(std::vector<double> fs) const;

private:
  std::vector<double> fs_;
  std::vector<NormalizedConfusionMatrix> gammas_;
};

/// Throws MissingEdgeProbability or MissingGamma.
ResolvedPipeline resolve(const Pipeline& p, const ClassifierProfileSet& profiles);
/// Gammas only; f is not needed for distribution-independent quantities.
std::vector<NormalizedConfusionMatrix> resolve_gammas(const Pipeline& p,
                                                      const ClassifierProfileSet& profiles);

/// chi = [[1, 1-f], [0, f]] * omega_prev: positives of the previous step
/// that fall outside the narrower domain become negatives.
Matrix2 context_switch(double f, const JointMatrix& omega_prev);

/// One filtering step: context switch followed by classification.
JointMatrix omega_step(const JointMatrix& omega_prev, double f,
                       const NormalizedConfusionMatrix& gamma);

/// Left fold of omega_step from the root output.
JointMatrix omega_recursive(const ResolvedPipeline& p);
JointMatrix omega_recursive(const Pipeline& p, const ClassifierProfileSet& profiles);

/// Unfolded form: w11 = F*prod(g11), w01 = sum over switch depths j of
/// (1-f_j) * F_{j-1} * prod_{r<j} g11 * prod_{s>=j} g01, and the other two
/// cells by complement.
JointMatrix omega_closed(const ResolvedPipeline& p);
JointMatrix omega_closed(const Pipeline& p, const ClassifierProfileSet& profiles);

enum class PsiMode { Recursive, Closed };

PsiMatrix psi(std::span<const NormalizedConfusionMatrix> gammas,
              PsiMode mode = PsiMode::Recursive);
PsiMatrix psi(const ResolvedPipeline& p, PsiMode mode = PsiMode::Recursive);
PsiMatrix psi(const Pipeline& p, const ClassifierProfileSet& profiles,
              PsiMode mode = PsiMode::Recursive);
/// Any category string; the empty string maps to mu. Overrides do not apply.
PsiMatrix psi(std::span<const CategoryId> s, const ClassifierProfileSet& profiles,
              PsiMode mode = PsiMode::Recursive);

/// Psi of a category string evaluated by splitting it in halves and
/// composing the images, i.e. through the homomorphism property.
PsiMatrix homomorphism_map(std::span<const CategoryId> s,
                           const ClassifierProfileSet& profiles);
PsiMatrix homomorphism_map(std::span<const NormalizedConfusionMatrix> gammas);

enum class EtaStatus {
  Finite,
  /// F = 1: no negative inputs exist, eta is meaningless.
  ZeroNegativeMass,
  /// Some classifier has a zero false-positive rate, so psi01 = 0 while the
  /// false-positive mass may still be positive.
  Unbounded,
};

std::string_view to_string(EtaStatus s) noexcept;

/// Omega = diag(1-F, F) * Phi.
struct Factorization {
  double prior_negative = 0.0;
  double prior_positive = 1.0;
  NormalizedConfusionMatrix phi = NormalizedConfusionMatrix::neutral();
  PsiMatrix psi = NormalizedConfusionMatrix::neutral();
  EtaStatus eta_status = EtaStatus::ZeroNegativeMass;
  /// Meaningful when eta_status is Finite; +inf when Unbounded, NaN otherwise.
  double eta = 0.0;

  JointMatrix reconstruct() const noexcept;
};

Factorization factorize(const ResolvedPipeline& p);
Factorization factorize(const Pipeline& p, const ClassifierProfileSet& profiles);

/// Expected confusion counts m * Omega, unrounded. Throws InvalidArgument
/// when m == 0.
Matrix2 expected_confusion(std::uint64_t m, const JointMatrix& omega);

}  // namespace pfcalc

#include "pfcalc/pipeline_model.hpp"

#include <cmath>
#include <limits>

#include "pfcalc/error.hpp"

namespace pfcalc {

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

ClassifierProfileSet::ClassifierProfileSet(CategoryId root) : root_(std::move(root)) {}

void ClassifierProfileSet::set(const CategoryId& c, const NormalizedConfusionMatrix& gamma) {
  if (c == root_) {
    throw Error(ErrorKind::RootProfileForbidden,
                "the root always passes everything down", c.str());
  }
  classifiers_.insert_or_assign(c, gamma);
}

void ClassifierProfileSet::set_override(std::string_view pipeline_path, const CategoryId& c,
                                        const NormalizedConfusionMatrix& gamma) {
  const auto nodes = split_path(pipeline_path);
  if (nodes.front() != root_) {
    throw Error(ErrorKind::InvalidArgument, "override path must start at the root",
                std::string(pipeline_path));
  }
  if (nodes.back() != c) {
    throw Error(ErrorKind::InvalidArgument,
                "override category must be the last element of its path",
                std::string(pipeline_path));
  }
  if (c == root_) {
    throw Error(ErrorKind::RootProfileForbidden,
                "the root always passes everything down", std::string(pipeline_path));
  }
  overrides_.insert_or_assign(join_path(nodes), gamma);
}

NormalizedConfusionMatrix ClassifierProfileSet::resolve(const CategoryId& c) const {
  if (c == root_) return NormalizedConfusionMatrix::neutral();
  auto it = classifiers_.find(c);
  if (it == classifiers_.end()) {
    throw Error(ErrorKind::MissingGamma, "no classifier profile", c.str());
  }
  return it->second;
}

NormalizedConfusionMatrix ClassifierProfileSet::resolve_at(
    std::span<const CategoryId> rooted_path) const {
  if (rooted_path.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty path");
  }
  if (rooted_path.size() == 1 && rooted_path.front() == root_) {
    return NormalizedConfusionMatrix::neutral();
  }
  if (!overrides_.empty()) {
    auto it = overrides_.find(join_path(rooted_path));
    if (it != overrides_.end()) return it->second;
  }
  return resolve(rooted_path.back());
}

// ---------------------------------------------------------------------------
// Resolved pipelines
// ---------------------------------------------------------------------------

ResolvedPipeline::ResolvedPipeline(std::vector<double> fs,
                                   std::vector<NormalizedConfusionMatrix> gammas)
    : fs_(std::move(fs)), gammas_(std::move(gammas)) {
  if (fs_.empty() || fs_.size() != gammas_.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "need matching, non-empty f and gamma sequences");
  }
  if (fs_[0] != 1.0) {
    throw Error(ErrorKind::OutOfRangeProbability, "f_0 must be exactly 1");
  }
  if (!(gammas_[0] == NormalizedConfusionMatrix::neutral())) {
    throw Error(ErrorKind::RootProfileForbidden, "root gamma must be neutral");
  }
  for (std::size_t k = 1; k < fs_.size(); ++k) {
    if (!(fs_[k] >= 0.0 && fs_[k] <= 1.0)) {
      throw Error(ErrorKind::OutOfRangeProbability, "f outside [0,1]",
                  "k=" + std::to_string(k));
    }
  }
}

ResolvedPipeline ResolvedPipeline::from_stages(
    std::span<const double> fs, std::span<const NormalizedConfusionMatrix> gammas) {
  std::vector<double> all_f{1.0};
  all_f.insert(all_f.end(), fs.begin(), fs.end());
  std::vector<NormalizedConfusionMatrix> all_g{NormalizedConfusionMatrix::neutral()};
  all_g.insert(all_g.end(), gammas.begin(), gammas.end());
  return ResolvedPipeline(std::move(all_f), std::move(all_g));
}

ResolvedPipeline ResolvedPipeline::prefix(std::size_t k) const {
  if (k > length()) throw Error(ErrorKind::InvalidArgument, "prefix longer than pipeline");
  const auto n = static_cast<std::ptrdiff_t>(k + 1);
  return ResolvedPipeline({fs_.begin(), fs_.begin() + n},
                          {gammas_.begin(), gammas_.begin() + n});
}

ResolvedPipeline ResolvedPipeline::with_profile(std::vector<double> fs) const {
  return ResolvedPipeline(std::move(fs), gammas_);
}

std::vector<NormalizedConfusionMatrix> resolve_gammas(const Pipeline& p,
                                                      const ClassifierProfileSet& profiles) {
  if (p.nodes().front() != profiles.root()) {
    throw Error(ErrorKind::InvalidArgument, "pipeline root differs from profile root",
                p.path());
  }
  std::vector<NormalizedConfusionMatrix> gammas;
  gammas.reserve(p.nodes().size());
  for (std::size_t k = 0; k < p.nodes().size(); ++k) {
    gammas.push_back(profiles.resolve_at(p.nodes().first(k + 1)));
  }
  return gammas;
}

ResolvedPipeline resolve(const Pipeline& p, const ClassifierProfileSet& profiles) {
  return ResolvedPipeline(p.conditional_profile(), resolve_gammas(p, profiles));
}

// ---------------------------------------------------------------------------
// Omega
// ---------------------------------------------------------------------------

Matrix2 context_switch(double f, const JointMatrix& omega_prev) {
  const auto& w = omega_prev.matrix();
  const double out = 1.0 - f;
  return {w.v00 + out * w.v10, w.v01 + out * w.v11, f * w.v10, f * w.v11};
}

JointMatrix omega_step(const JointMatrix& omega_prev, double f,
                       const NormalizedConfusionMatrix& gamma) {
  return JointMatrix::trusted(oplus(context_switch(f, omega_prev), gamma.matrix()));
}

JointMatrix omega_recursive(const ResolvedPipeline& p) {
  auto omega = JointMatrix::root();
  for (std::size_t k = 1; k <= p.length(); ++k) {
    omega = omega_step(omega, p.f(k), p.gamma(k));
  }
  return omega;
}

JointMatrix omega_recursive(const Pipeline& p, const ClassifierProfileSet& profiles) {
  return omega_recursive(resolve(p, profiles));
}

JointMatrix omega_closed(const ResolvedPipeline& p) {
  const std::size_t len = p.length();
  if (len == 0) return JointMatrix::root();

  // suffix01[j] = prod_{s=j..L} g01^(s)
  std::vector<double> suffix01(len + 2, 1.0);
  for (std::size_t s = len + 1; s-- > 1;) {
    suffix01[s] = suffix01[s + 1] * p.gamma(s).fp();
  }

  double traversal = 1.0;  // F_{j-1}
  double recall = 1.0;     // prod_{r<j} g11^(r)
  double fp_mass = 0.0;
  for (std::size_t j = 1; j <= len; ++j) {
    fp_mass += (1.0 - p.f(j)) * traversal * recall * suffix01[j];
    traversal *= p.f(j);
    recall *= p.gamma(j).tp();
  }
  const double tp_mass = traversal * recall;
  return JointMatrix::trusted(
      {(1.0 - traversal) - fp_mass, fp_mass, traversal - tp_mass, tp_mass});
}

JointMatrix omega_closed(const Pipeline& p, const ClassifierProfileSet& profiles) {
  return omega_closed(resolve(p, profiles));
}

// ---------------------------------------------------------------------------
// Psi
// ---------------------------------------------------------------------------

PsiMatrix psi(std::span<const NormalizedConfusionMatrix> gammas, PsiMode mode) {
  if (mode == PsiMode::Recursive) {
    auto acc = NormalizedConfusionMatrix::neutral();
    for (const auto& g : gammas) acc = oplus(acc, g);
    return acc;
  }
  double fp = 1.0;
  double tp = 1.0;
  for (const auto& g : gammas) {
    fp *= g.fp();
    tp *= g.tp();
  }
  return NormalizedConfusionMatrix::trusted({1.0 - fp, fp, 1.0 - tp, tp});
}

PsiMatrix psi(const ResolvedPipeline& p, PsiMode mode) { return psi(p.gammas(), mode); }

PsiMatrix psi(const Pipeline& p, const ClassifierProfileSet& profiles, PsiMode mode) {
  return psi(resolve_gammas(p, profiles), mode);
}

namespace {

std::vector<NormalizedConfusionMatrix> string_gammas(std::span<const CategoryId> s,
                                                     const ClassifierProfileSet& profiles) {
  std::vector<NormalizedConfusionMatrix> gammas;
  gammas.reserve(s.size());
  for (const auto& c : s) gammas.push_back(profiles.resolve(c));
  return gammas;
}

}  // namespace

PsiMatrix psi(std::span<const CategoryId> s, const ClassifierProfileSet& profiles,
              PsiMode mode) {
  return psi(string_gammas(s, profiles), mode);
}

PsiMatrix homomorphism_map(std::span<const NormalizedConfusionMatrix> gammas) {
  if (gammas.empty()) return NormalizedConfusionMatrix::neutral();
  if (gammas.size() == 1) return gammas.front();
  const auto half = gammas.size() / 2;
  return oplus(homomorphism_map(gammas.first(half)), homomorphism_map(gammas.subspan(half)));
}

PsiMatrix homomorphism_map(std::span<const CategoryId> s,
                           const ClassifierProfileSet& profiles) {
  return homomorphism_map(string_gammas(s, profiles));
}

// ---------------------------------------------------------------------------
// Factorization
// ---------------------------------------------------------------------------

std::string_view to_string(EtaStatus s) noexcept {
  switch (s) {
    case EtaStatus::Finite: return "finite";
    case EtaStatus::ZeroNegativeMass: return "zero-negative-mass";
    case EtaStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

JointMatrix Factorization::reconstruct() const noexcept {
  const auto& m = phi.matrix();
  return JointMatrix::trusted({prior_negative * m.v00, prior_negative * m.v01,
                               prior_positive * m.v10, prior_positive * m.v11});
}

Factorization factorize(const ResolvedPipeline& p) {
  // eta is back-derived from the false-positive mass of the unfolded form,
  // which stays finite when some g01 vanishes.
  const auto omega = omega_closed(p);
  Factorization out;
  out.psi = psi(p, PsiMode::Closed);

  double traversal = 1.0;
  for (double f : p.fs()) traversal *= f;
  out.prior_positive = traversal;
  out.prior_negative = 1.0 - traversal;

  const double psi01 = out.psi.fp();
  const double psi11 = out.psi.tp();
  double phi01;
  if (out.prior_negative == 0.0) {
    out.eta_status = EtaStatus::ZeroNegativeMass;
    out.eta = std::numeric_limits<double>::quiet_NaN();
    phi01 = psi01;
  } else {
    phi01 = omega.fp() / out.prior_negative;
    if (psi01 == 0.0) {
      out.eta_status = EtaStatus::Unbounded;
      out.eta = std::numeric_limits<double>::infinity();
    } else {
      out.eta_status = EtaStatus::Finite;
      out.eta = omega.fp() / (out.prior_negative * psi01);
    }
  }
  out.phi = NormalizedConfusionMatrix::trusted({1.0 - phi01, phi01, 1.0 - psi11, psi11});
  return out;
}

Factorization factorize(const Pipeline& p, const ClassifierProfileSet& profiles) {
  return factorize(resolve(p, profiles));
}

Matrix2 expected_confusion(std::uint64_t m, const JointMatrix& omega) {
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "m must be at least 1");
  return scale(static_cast<double>(m), omega.matrix());
}

}  // namespace pfcalc

#include "pfcalc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pfcalc/error.hpp"

namespace pfcalc {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void require_unit(double v, const char* name) {
  if (!in_unit(v)) {
    throw Error(ErrorKind::OutOfRangeProbability,
                "value " + std::to_string(v) + " outside [0,1]", name);
  }
}

}  // namespace

double max_abs_diff(const Matrix2& a, const Matrix2& b) noexcept {
  return std::max({std::abs(a.v00 - b.v00), std::abs(a.v01 - b.v01),
                   std::abs(a.v10 - b.v10), std::abs(a.v11 - b.v11)});
}

Matrix2 scale(double factor, const Matrix2& m) noexcept {
  return {factor * m.v00, factor * m.v01, factor * m.v10, factor * m.v11};
}

Matrix2 oplus(const Matrix2& a, const Matrix2& b) noexcept {
  return {a.v00 + a.v01 * b.v00, a.v01 * b.v01,
          a.v10 + a.v11 * b.v10, a.v11 * b.v11};
}

NormalizedConfusionMatrix NormalizedConfusionMatrix::from_rates(
    double tn, double fp, double fn, double tp, double tolerance) {
  require_unit(tn, "tn");
  require_unit(fp, "fp");
  require_unit(fn, "fn");
  require_unit(tp, "tp");
  if (std::abs(tn + fp - 1.0) > tolerance) {
    throw Error(ErrorKind::OutOfRangeProbability,
                "negative row tn+fp sums to " + std::to_string(tn + fp),
                "row 0");
  }
  if (std::abs(fn + tp - 1.0) > tolerance) {
    throw Error(ErrorKind::OutOfRangeProbability,
                "positive row fn+tp sums to " + std::to_string(fn + tp),
                "row 1");
  }
  return NormalizedConfusionMatrix({tn, fp, fn, tp});
}

NormalizedConfusionMatrix NormalizedConfusionMatrix::from_positive_rates(
    double fp, double tp) {
  require_unit(fp, "fp");
  require_unit(tp, "tp");
  return NormalizedConfusionMatrix({1.0 - fp, fp, 1.0 - tp, tp});
}

NormalizedConfusionMatrix NormalizedConfusionMatrix::neutral() noexcept {
  return NormalizedConfusionMatrix({0.0, 1.0, 0.0, 1.0});
}

NormalizedConfusionMatrix NormalizedConfusionMatrix::trusted(
    const Matrix2& m) noexcept {
  return NormalizedConfusionMatrix(m);
}

NormalizedConfusionMatrix oplus(const NormalizedConfusionMatrix& a,
                                const NormalizedConfusionMatrix& b) noexcept {
  return NormalizedConfusionMatrix::trusted(oplus(a.matrix(), b.matrix()));
}

JointMatrix JointMatrix::from_cells(double w00, double w01, double w10,
                                    double w11, double tolerance) {
  require_unit(w00, "w00");
  require_unit(w01, "w01");
  require_unit(w10, "w10");
  require_unit(w11, "w11");
  const double total = w00 + w01 + w10 + w11;
  if (std::abs(total - 1.0) > tolerance) {
    throw Error(ErrorKind::OutOfRangeProbability,
                "joint matrix sums to " + std::to_string(total));
  }
  return JointMatrix({w00, w01, w10, w11});
}

JointMatrix JointMatrix::trusted(const Matrix2& m) noexcept {
  return JointMatrix(m);
}

JointMatrix JointMatrix::root() noexcept { return JointMatrix({0, 0, 0, 1}); }

}  // namespace pfcalc

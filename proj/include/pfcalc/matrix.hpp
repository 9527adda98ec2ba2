#pragma once

#include <array>

namespace pfcalc {

/// Plain 2x2 real matrix. Row index is the true label X, column index the
/// predicted label: v00 = (X=0, pred=0), v01 = (X=0, pred=1), and so on.
struct Matrix2 {
  double v00 = 0.0;
  double v01 = 0.0;
  double v10 = 0.0;
  double v11 = 0.0;

  double at(int row, int col) const noexcept {
    return row == 0 ? (col == 0 ? v00 : v01) : (col == 0 ? v10 : v11);
  }
  std::array<double, 4> cells() const noexcept { return {v00, v01, v10, v11}; }

  double sum() const noexcept { return v00 + v01 + v10 + v11; }
  double trace() const noexcept { return v00 + v11; }
  double row_sum(int row) const noexcept { return row == 0 ? v00 + v01 : v10 + v11; }

  friend bool operator==(const Matrix2&, const Matrix2&) = default;
};

double max_abs_diff(const Matrix2& a, const Matrix2& b) noexcept;
Matrix2 scale(double factor, const Matrix2& m) noexcept;

/// Composition of one filtering step: rows of `a` are split into the
/// rejected part (column 0, kept as is) and the accepted part (column 1),
/// which is then classified by `b`.
///   [[a00 + a01*b00, a01*b01], [a10 + a11*b10, a11*b11]]
Matrix2 oplus(const Matrix2& a, const Matrix2& b) noexcept;

/// Row-normalized 2x2 matrix p(pred | X): [[tn, fp], [fn, tp]] rates.
/// Also used for the pipeline-level Psi and Phi matrices.
class NormalizedConfusionMatrix {
public:
  static constexpr double kRowTolerance = 1e-12;

  /// Throws OutOfRangeProbability if an entry leaves [0,1] or a row does not
  /// sum to 1 within `tolerance`.
  static NormalizedConfusionMatrix from_rates(double tn, double fp, double fn,
                                              double tp,
                                              double tolerance = kRowTolerance);
  /// Rows filled by normalization: [[1-fp, fp], [1-tp, tp]].
  static NormalizedConfusionMatrix from_positive_rates(double fp, double tp);
  /// The classifier that accepts everything: [[0,1],[0,1]].
  static NormalizedConfusionMatrix neutral() noexcept;
  /// Wraps a matrix already known to be row-normalized (closure of oplus).
  static NormalizedConfusionMatrix trusted(const Matrix2& m) noexcept;

  double tn() const noexcept { return m_.v00; }
  double fp() const noexcept { return m_.v01; }
  double fn() const noexcept { return m_.v10; }
  double tp() const noexcept { return m_.v11; }
  /// Probability of acceptance given the true label.
  double accept(int label) const noexcept { return label ? m_.v11 : m_.v01; }

  const Matrix2& matrix() const noexcept { return m_; }

  friend bool operator==(const NormalizedConfusionMatrix&,
                         const NormalizedConfusionMatrix&) = default;

private:
  explicit NormalizedConfusionMatrix(const Matrix2& m) noexcept : m_(m) {}
  Matrix2 m_;
};

using PsiMatrix = NormalizedConfusionMatrix;

NormalizedConfusionMatrix oplus(const NormalizedConfusionMatrix& a,
                                const NormalizedConfusionMatrix& b) noexcept;

/// Joint probability of (true label, pipeline decision); cells sum to 1.
class JointMatrix {
public:
  static constexpr double kSumTolerance = 1e-12;

  /// Throws OutOfRangeProbability on entries outside [0,1] or a total that
  /// differs from 1 by more than `tolerance`.
  static JointMatrix from_cells(double w00, double w01, double w10, double w11,
                                double tolerance = kSumTolerance);
  static JointMatrix trusted(const Matrix2& m) noexcept;
  /// Output of the root: every document is a positive and is accepted.
  static JointMatrix root() noexcept;

  double tn() const noexcept { return m_.v00; }
  double fp() const noexcept { return m_.v01; }
  double fn() const noexcept { return m_.v10; }
  double tp() const noexcept { return m_.v11; }
  const Matrix2& matrix() const noexcept { return m_; }

  friend bool operator==(const JointMatrix&, const JointMatrix&) = default;

private:
  explicit JointMatrix(const Matrix2& m) noexcept : m_(m) {}
  Matrix2 m_;
};

}  // namespace pfcalc

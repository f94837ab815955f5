#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ink {

using Point = Eigen::VectorXd;

struct GaussianKernel {
  double bandwidth = 1.0;
};
struct LinearKernel {};
struct PolynomialKernel {
  int degree = 2;
  double offset = 1.0;
};

/// Kernel family plus hyperparameters. Evaluation is a pure function of two points.
class KernelSpec {
 public:
  using Family = std::variant<GaussianKernel, LinearKernel, PolynomialKernel>;

  KernelSpec() : family_(GaussianKernel{}) {}
  explicit KernelSpec(Family family);

  static KernelSpec gaussian(double bandwidth) { return KernelSpec(GaussianKernel{bandwidth}); }
  static KernelSpec linear() { return KernelSpec(LinearKernel{}); }
  static KernelSpec polynomial(int degree, double offset) {
    return KernelSpec(PolynomialKernel{degree, offset});
  }

  const Family& family() const { return family_; }
  std::string name() const;

 private:
  Family family_;
};

/// Ordered points of a fixed dimension, optionally labelled. Immutable after construction.
class Dataset {
 public:
  Dataset(std::vector<Point> points, std::optional<std::vector<double>> labels = std::nullopt);

  std::size_t size() const { return points_.size(); }
  std::size_t dimension() const { return dimension_; }
  bool has_labels() const { return labels_.has_value(); }

  // 1-based, matching the [n] index convention used in reports.
  const Point& point(std::size_t index) const;
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& labels() const;
  Eigen::VectorXd label_vector(std::size_t t) const;

 private:
  std::vector<Point> points_;
  std::optional<std::vector<double>> labels_;
  std::size_t dimension_ = 0;
};

/// Bordering data for the arriving point: cross[j] = K(x_new, x_{restrict_to[j]}).
struct KernelColumn {
  std::size_t index = 0;
  std::vector<std::size_t> restrict_to;
  Eigen::VectorXd cross;
  double self_term = 0.0;
};

double evaluate(const KernelSpec& spec, const Point& x, const Point& y);

// restrict_to must be a subset of [1, t_plus_1 - 1]; it is sorted into ascending order.
KernelColumn stream_column(const Dataset& data, const KernelSpec& spec, std::size_t t_plus_1,
                           std::vector<std::size_t> restrict_to);

// Dense Gram matrix on the prefix [1..t]. Desk scale only.
Eigen::MatrixXd gram(const Dataset& data, const KernelSpec& spec, std::size_t t);

inline constexpr std::size_t kDeskScaleCap = 5000;

}  // namespace ink

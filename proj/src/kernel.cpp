#include "ink/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

KernelSpec::KernelSpec(Family family) : family_(std::move(family)) {
  std::visit(Overloaded{
                 [](const GaussianKernel& g) {
                   if (!(g.bandwidth > 0.0)) throw InputError("gaussian bandwidth must be positive");
                 },
                 [](const LinearKernel&) {},
                 [](const PolynomialKernel& p) {
                   if (p.degree < 1) throw InputError("polynomial degree must be a positive integer");
                   if (!(p.offset >= 0.0)) throw InputError("polynomial offset must be nonnegative");
                 },
             },
             family_);
}

std::string KernelSpec::name() const {
  return std::visit(Overloaded{
                        [](const GaussianKernel&) { return std::string("gaussian"); },
                        [](const LinearKernel&) { return std::string("linear"); },
                        [](const PolynomialKernel&) { return std::string("polynomial"); },
                    },
                    family_);
}

Dataset::Dataset(std::vector<Point> points, std::optional<std::vector<double>> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.empty()) throw InputError("dataset must contain at least one point");
  dimension_ = static_cast<std::size_t>(points_.front().size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (static_cast<std::size_t>(points_[i].size()) != dimension_) {
      std::ostringstream msg;
      msg << "point " << i + 1 << " has dimension " << points_[i].size() << ", expected "
          << dimension_;
      throw InputError(msg.str());
    }
  }
  if (labels_ && labels_->size() != points_.size())
    throw InputError("label count does not match point count");
}

const Point& Dataset::point(std::size_t index) const {
  if (index < 1 || index > points_.size()) {
    std::ostringstream msg;
    msg << "point index " << index << " outside [1, " << points_.size() << "]";
    throw InputError(msg.str());
  }
  return points_[index - 1];
}

const std::vector<double>& Dataset::labels() const {
  if (!labels_) throw InputError("dataset has no labels");
  return *labels_;
}

Eigen::VectorXd Dataset::label_vector(std::size_t t) const {
  const auto& y = labels();
  if (t > y.size()) throw InputError("label prefix longer than dataset");
  Eigen::VectorXd out(static_cast<Eigen::Index>(t));
  for (std::size_t i = 0; i < t; ++i) out[static_cast<Eigen::Index>(i)] = y[i];
  return out;
}

double evaluate(const KernelSpec& spec, const Point& x, const Point& y) {
  if (x.size() != y.size()) {
    std::ostringstream msg;
    msg << "kernel arguments differ in dimension (" << x.size() << " vs " << y.size() << ")";
    throw InputError(msg.str());
  }
  return std::visit(Overloaded{
                        [&](const GaussianKernel& g) {
                          const double sq = (x - y).squaredNorm();
                          return std::exp(-sq / (2.0 * g.bandwidth * g.bandwidth));
                        },
                        [&](const LinearKernel&) { return x.dot(y); },
                        [&](const PolynomialKernel& p) {
                          return std::pow(x.dot(y) + p.offset, p.degree);
                        },
                    },
                    spec.family());
}

KernelColumn stream_column(const Dataset& data, const KernelSpec& spec, std::size_t t_plus_1,
                           std::vector<std::size_t> restrict_to) {
  const Point& incoming = data.point(t_plus_1);
  std::sort(restrict_to.begin(), restrict_to.end());
  KernelColumn col;
  col.index = t_plus_1;
  col.cross.resize(static_cast<Eigen::Index>(restrict_to.size()));
  for (std::size_t j = 0; j < restrict_to.size(); ++j) {
    const std::size_t i = restrict_to[j];
    if (i < 1 || i >= t_plus_1) {
      std::ostringstream msg;
      msg << "restriction index " << i << " not in [1, " << t_plus_1 - 1 << "]";
      throw InputError(msg.str());
    }
    col.cross[static_cast<Eigen::Index>(j)] = evaluate(spec, incoming, data.point(i));
  }
  col.self_term = evaluate(spec, incoming, incoming);
  col.restrict_to = std::move(restrict_to);
  return col;
}

Eigen::MatrixXd gram(const Dataset& data, const KernelSpec& spec, std::size_t t) {
  if (t < 1 || t > data.size()) throw InputError("gram prefix length out of range");
  if (t > kDeskScaleCap) throw InputError("gram requested above the desk-scale cap");
  const auto n = static_cast<Eigen::Index>(t);
  Eigen::MatrixXd K(n, n);
  // Row r is filled exactly like stream_column(r, [1..r-1]) so borders agree bit for bit.
  for (Eigen::Index r = 0; r < n; ++r) {
    const Point& xr = data.points()[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < r; ++c) {
      const double v = evaluate(spec, xr, data.points()[static_cast<std::size_t>(c)]);
      K(r, c) = v;
      K(c, r) = v;
    }
    K(r, r) = evaluate(spec, xr, xr);
  }
  return K;
}

}  // namespace ink

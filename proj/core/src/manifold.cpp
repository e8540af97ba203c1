#include "mrk/manifold.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace mrk {

namespace {

double fd_step(const Vec& x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * (1.0 + x.norm());
}

void require_finite(const Vec& x, int dim) {
  if (x.size() != dim) {
    throw DomainError("point has dimension " + std::to_string(x.size()) + ", expected " +
                      std::to_string(dim));
  }
  if (!x.allFinite()) throw DomainError("non-finite point");
}

}  // namespace

class Manifold::Impl {
 public:
  explicit Impl(int dim, ManifoldKind kind) : dim_(dim), kind_(kind) {}
  virtual ~Impl() = default;

  int dim() const { return dim_; }
  ManifoldKind kind() const { return kind_; }

  virtual double zeta(const Vec& x) const = 0;
  virtual Vec grad(const Vec& x) const = 0;
  virtual bool analytic_hessian() const { return false; }
  virtual Vec hess_action(const Vec& x, const Vec& v) const {
    return fd_directional([this](const Vec& y) { return grad(y); }, x, v);
  }
  virtual Vec default_point() const = 0;

  virtual std::optional<double> major_radius() const { return std::nullopt; }
  virtual std::optional<double> minor_radius() const { return std::nullopt; }
  virtual std::optional<int> matrix_order() const { return std::nullopt; }

 private:
  int dim_;
  ManifoldKind kind_;
};

namespace {

class Sphere final : public Manifold::Impl {
 public:
  explicit Sphere(int dim) : Impl(dim, ManifoldKind::sphere) {}
  double zeta(const Vec& x) const override { return 0.5 * (x.squaredNorm() - 1.0); }
  Vec grad(const Vec& x) const override { return x; }
  bool analytic_hessian() const override { return true; }
  Vec hess_action(const Vec&, const Vec& v) const override { return v; }
  Vec default_point() const override {
    Vec p = Vec::Zero(dim());
    p(dim() - 1) = 1.0;
    return p;
  }
};

class Torus final : public Manifold::Impl {
 public:
  Torus(double R, double r) : Impl(3, ManifoldKind::torus), R_(R), r_(r) {}

  double zeta(const Vec& x) const override {
    const double s = x.squaredNorm() + R_ * R_ - r_ * r_;
    return s * s - 4.0 * R_ * R_ * (x(0) * x(0) + x(1) * x(1));
  }
  Vec grad(const Vec& x) const override {
    const double s = x.squaredNorm() + R_ * R_ - r_ * r_;
    Vec g = 4.0 * s * x;
    g(0) -= 8.0 * R_ * R_ * x(0);
    g(1) -= 8.0 * R_ * R_ * x(1);
    return g;
  }
  bool analytic_hessian() const override { return true; }
  // H = 4 s I + 8 x x^T - 8 R^2 diag(1, 1, 0)
  Vec hess_action(const Vec& x, const Vec& v) const override {
    const double s = x.squaredNorm() + R_ * R_ - r_ * r_;
    Vec out = 4.0 * s * v + 8.0 * x.dot(v) * x;
    out(0) -= 8.0 * R_ * R_ * v(0);
    out(1) -= 8.0 * R_ * R_ * v(1);
    return out;
  }
  Vec default_point() const override {
    Vec p = Vec::Zero(3);
    p(0) = R_ + r_;
    return p;
  }
  std::optional<double> major_radius() const override { return R_; }
  std::optional<double> minor_radius() const override { return r_; }

 private:
  double R_;
  double r_;
};

// Row-major flattening: x(i*m + j) = X(i, j).
class SpecialLinear final : public Manifold::Impl {
 public:
  explicit SpecialLinear(int m) : Impl(m * m, ManifoldKind::special_linear), m_(m) {}

  double zeta(const Vec& x) const override { return determinant(x) - 1.0; }

  Vec grad(const Vec& x) const override {
    Vec g(dim());
    if (m_ == 2) {
      g << x(3), -x(2), -x(1), x(0);
      return g;
    }
    if (m_ == 3) {
      const auto X = [&x](int i, int j) { return x(3 * i + j); };
      for (int i = 0; i < 3; ++i) {
        const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        for (int j = 0; j < 3; ++j) {
          const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
          g(3 * i + j) = X(i1, j1) * X(i2, j2) - X(i1, j2) * X(i2, j1);
        }
      }
      return g;
    }
    const Mat X = as_matrix(x);
    Eigen::PartialPivLU<Mat> lu(X);
    const double det = lu.determinant();
    const double scale = X.cwiseAbs().maxCoeff();
    // rcond-style guard; near-singular matrices go through explicit minors.
    if (std::abs(det) > 1e-8 * std::pow(scale, m_)) {
      const Mat cof = det * lu.inverse().transpose();
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) g(m_ * i + j) = cof(i, j);
      return g;
    }
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < m_; ++j) {
        Mat minor(m_ - 1, m_ - 1);
        for (int r = 0, rr = 0; r < m_; ++r) {
          if (r == i) continue;
          for (int c = 0, cc = 0; c < m_; ++c) {
            if (c == j) continue;
            minor(rr, cc++) = X(r, c);
          }
          ++rr;
        }
        g(m_ * i + j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
      }
    }
    return g;
  }

  bool analytic_hessian() const override { return m_ <= 3; }

  Vec hess_action(const Vec& x, const Vec& v) const override {
    if (m_ > 3) return Impl::hess_action(x, v);
    Vec out(dim());
    if (m_ == 2) {
      out << v(3), -v(2), -v(1), v(0);
      return out;
    }
    const auto X = [&x](int i, int j) { return x(3 * i + j); };
    const auto V = [&v](int i, int j) { return v(3 * i + j); };
    for (int i = 0; i < 3; ++i) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      for (int j = 0; j < 3; ++j) {
        const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
        out(3 * i + j) = V(i1, j1) * X(i2, j2) + X(i1, j1) * V(i2, j2) -
                         V(i1, j2) * X(i2, j1) - X(i1, j2) * V(i2, j1);
      }
    }
    return out;
  }

  Vec default_point() const override {
    Vec p = Vec::Zero(dim());
    for (int i = 0; i < m_; ++i) p(m_ * i + i) = 1.0;
    return p;
  }
  std::optional<int> matrix_order() const override { return m_; }

 private:
  Mat as_matrix(const Vec& x) const {
    Mat X(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) X(i, j) = x(m_ * i + j);
    return X;
  }
  double determinant(const Vec& x) const {
    if (m_ == 2) return x(0) * x(3) - x(1) * x(2);
    return as_matrix(x).determinant();
  }

  int m_;
};

class Custom final : public Manifold::Impl {
 public:
  Custom(int dim, Manifold::ScalarFn zeta, Manifold::VectorFn grad,
         Manifold::HessianActionFn hess)
      : Impl(dim, ManifoldKind::custom),
        zeta_(std::move(zeta)),
        grad_(std::move(grad)),
        hess_(std::move(hess)) {}

  double zeta(const Vec& x) const override { return zeta_(x); }
  Vec grad(const Vec& x) const override {
    if (grad_) return grad_(x);
    return fd_gradient(zeta_, x);
  }
  bool analytic_hessian() const override { return static_cast<bool>(hess_); }
  Vec hess_action(const Vec& x, const Vec& v) const override {
    if (hess_) return hess_(x, v);
    return Impl::hess_action(x, v);
  }
  Vec default_point() const override {
    throw PreconditionError("custom manifolds have no default point; supply x0");
  }

 private:
  Manifold::ScalarFn zeta_;
  Manifold::VectorFn grad_;
  Manifold::HessianActionFn hess_;
};

}  // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::sphere:
      return "sphere";
    case ManifoldKind::torus:
      return "torus";
    case ManifoldKind::special_linear:
      return "sl";
    case ManifoldKind::custom:
      return "custom";
  }
  return "unknown";
}

Manifold::Manifold(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Manifold Manifold::sphere(int dim) {
  if (dim < 2 || dim > kMaxDim) {
    throw StructuralError("sphere dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  }
  return Manifold(std::make_shared<Sphere>(dim));
}

Manifold Manifold::torus(double major_radius, double minor_radius) {
  if (!(minor_radius > 0.0) || !(major_radius > minor_radius) || !std::isfinite(major_radius)) {
    throw StructuralError("torus requires R > r > 0");
  }
  return Manifold(std::make_shared<Torus>(major_radius, minor_radius));
}

Manifold Manifold::special_linear(int m) {
  if (m < 2 || m * m > kMaxDim) throw StructuralError("SL(m) requires 2 <= m <= 5");
  return Manifold(std::make_shared<SpecialLinear>(m));
}

Manifold Manifold::custom(int dim, ScalarFn zeta, VectorFn grad, HessianActionFn hess_action) {
  if (dim < 1 || dim > kMaxDim) throw StructuralError("custom manifold dimension out of range");
  if (!zeta) throw StructuralError("custom manifold needs a constraint function");
  return Manifold(
      std::make_shared<Custom>(dim, std::move(zeta), std::move(grad), std::move(hess_action)));
}

int Manifold::ambient_dim() const { return impl_->dim(); }
ManifoldKind Manifold::kind() const { return impl_->kind(); }

double Manifold::zeta(const Vec& x) const {
  require_finite(x, impl_->dim());
  return impl_->zeta(x);
}

Vec Manifold::grad(const Vec& x) const {
  require_finite(x, impl_->dim());
  return impl_->grad(x);
}

double Manifold::gram(const Vec& x) const { return grad(x).squaredNorm(); }

Vec Manifold::hess_action(const Vec& x, const Vec& v) const {
  require_finite(x, impl_->dim());
  return impl_->hess_action(x, v);
}

bool Manifold::has_analytic_hessian() const { return impl_->analytic_hessian(); }

Vec Manifold::project_tangent(const Vec& x, const Vec& v) const {
  const Vec g = grad(x);
  const double G = g.squaredNorm();
  if (G <= gram_threshold(x)) throw SingularProjection("Gram function vanishes at x");
  return v - (g.dot(v) / G) * g;
}

std::optional<double> Manifold::torus_major_radius() const { return impl_->major_radius(); }
std::optional<double> Manifold::torus_minor_radius() const { return impl_->minor_radius(); }
std::optional<int> Manifold::matrix_order() const { return impl_->matrix_order(); }
Vec Manifold::default_point() const { return impl_->default_point(); }

double gram_threshold(const Vec& x) { return 1e-12 * (1.0 + x.squaredNorm()); }

Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x) {
  const double h = fd_step(x);
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = fn(xp);
    xp(i) = x(i) - h;
    const double fm = fn(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vec fd_directional(const std::function<Vec(const Vec&)>& fn, const Vec& x,
                   const Vec& direction) {
  const double norm = direction.norm();
  if (norm == 0.0) return Vec::Zero(x.size());
  const double h = fd_step(x) / norm;
  const Vec xp = x + h * direction;
  const Vec xm = x - h * direction;
  return (fn(xp) - fn(xm)) / (2.0 * h);
}

}  // namespace mrk

#include "dfvem/problems.hpp"

#include "dfvem/exceptions.hpp"
#include "dfvem/quadrature.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <map>
#include <numbers>

namespace dfvem {

namespace {

constexpr double pi = std::numbers::pi;

// Polynomial in physical coordinates, x^a y^b -> coefficient.
struct Poly {
  std::map<std::pair<int, int>, double> terms;

  double operator()(const Point& x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms) s += c * std::pow(x.x(), e.first) * std::pow(x.y(), e.second);
    return s;
  }
  Poly diff(int dir) const {
    Poly d;
    for (const auto& [e, c] : terms) {
      const int k = dir == 0 ? e.first : e.second;
      if (k == 0) continue;
      const auto ne = dir == 0 ? std::pair{e.first - 1, e.second} : std::pair{e.first, e.second - 1};
      d.terms[ne] += c * k;
    }
    return d;
  }
};

// Deterministic, well spread coefficients of total degree <= p.
Poly sample_poly(int p, double phase) {
  Poly q;
  for (int k = 0; k <= p; ++k)
    for (int b = 0; b <= k; ++b) q.terms[{k - b, b}] = std::cos(1.3 * (k - b) + 0.7 * b + phase) / (1.0 + k);
  return q;
}

double domain_mean(Domain domain, const ScalarField& s, std::optional<Point> corner, int exactness) {
  const auto poly = domain_polygon(domain);
  const QuadratureRule q = corner ? corner_refined_quadrature(poly, *corner, exactness, 40, 0.5)
                                  : polygon_quadrature(poly, exactness);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += q.weights[i] * s(q.points[i]);
  return sum / signed_area(poly);
}

// Angular profile of the corner solution and its first three derivatives.
struct Profile {
  double alpha, a;
  std::array<double, 4> operator()(double t) const {
    const double p = 1.0 + alpha, m = 1.0 - alpha;
    const double sp = std::sin(p * t), cp = std::cos(p * t), sm = std::sin(m * t), cm = std::cos(m * t);
    return {a * sp / p - cp - a * sm / m + cm,
            a * cp + p * sp - a * cm - m * sm,
            -a * p * sp + p * p * cp + a * m * sm - m * m * cm,
            -a * p * p * cp - p * p * p * sp + a * m * m * cm + m * m * m * sm};
  }
};

}  // namespace

std::vector<Point> domain_polygon(Domain domain) {
  if (domain == Domain::unit_square) return {Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)};
  return {Point(-1, -1), Point(0, -1), Point(0, 0), Point(1, 0), Point(1, 1), Point(-1, 1)};
}

double singular_exponent(double phi) {
  if (!(phi > 0.0 && phi < 2.0 * pi)) throw ConfigError("corner angle must lie in (0, 2 pi)");
  if (std::abs(phi - pi) < 1e-14) throw ConfigError("corner angle pi is not a corner");
  if (phi < pi) return 1.0;
  const double sphi = std::sin(phi);
  double best = 2.0;
  for (const double sign : {1.0, -1.0}) {
    const auto f = [&](double l) { return std::sin(l * phi) - sign * l * sphi; };
    constexpr int samples = 20000;
    double lo = 1e-6, flo = f(lo);
    for (int i = 1; i <= samples; ++i) {
      const double hi = 1e-6 + (2.0 - 1e-6) * i / samples;
      const double fhi = f(hi);
      if (hi > best) break;
      if (fhi == 0.0) {
        best = hi;
        break;
      }
      if (flo * fhi < 0.0) {
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(
            f, lo, hi, flo, fhi, [](double x, double y) { return std::abs(x - y) <= 1e-15; }, iters);
        best = std::min(best, 0.5 * (r.first + r.second));
        break;
      }
      lo = hi;
      flo = fhi;
    }
  }
  return best;
}

TestProblem test_problem_1() {
  TestProblem tp;
  tp.name = "analytic_square";
  tp.domain = Domain::unit_square;
  tp.velocity = [](const Point& x) {
    const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
    return Eigen::Vector2d(-0.25 * sx * sx * std::sin(2 * pi * x.y()), 0.25 * sy * sy * std::sin(2 * pi * x.x()));
  };
  tp.velocity_gradient = [](const Point& x) {
    const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
    const double s2x = std::sin(2 * pi * x.x()), s2y = std::sin(2 * pi * x.y());
    Eigen::Matrix2d g;
    g << -0.25 * pi * s2x * s2y, -0.5 * pi * sx * sx * std::cos(2 * pi * x.y()),
        0.5 * pi * sy * sy * std::cos(2 * pi * x.x()), 0.25 * pi * s2x * s2y;
    return g;
  };
  tp.pressure = [](const Point& x) { return std::sin(pi * x.x()) - std::sin(pi * x.y()); };
  tp.force = [](const Point& x) {
    const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
    const double fx = 0.25 * std::sin(2 * pi * x.y()) * (2 * pi * pi * std::cos(2 * pi * x.x()) - 4 * pi * pi * sx * sx) -
                      pi * std::cos(pi * x.x());
    const double fy = -0.25 * std::sin(2 * pi * x.x()) * (2 * pi * pi * std::cos(2 * pi * x.y()) - 4 * pi * pi * sy * sy) +
                      pi * std::cos(pi * x.y());
    return Eigen::Vector2d(fx, fy);
  };
  return tp;
}

TestProblem test_problem_2() {
  const double omega = 1.5 * pi;
  const double alpha = singular_exponent(omega);
  const Profile psi{alpha, std::cos(alpha * omega)};
  const auto angle = [](const Point& x) {
    const double t = std::atan2(x.y(), x.x());
    return t < 0.0 ? t + 2.0 * pi : t;
  };

  TestProblem tp;
  tp.name = "singular_lshape";
  tp.domain = Domain::l_shape;
  tp.homogeneous_dirichlet = false;
  tp.singular_corner = Point::Zero();
  tp.velocity = [=](const Point& x) {
    const double r = x.norm();
    if (r == 0.0) return Eigen::Vector2d(0.0, 0.0);
    const double t = angle(x);
    const auto d = psi(t);
    const double f = (1 + alpha) * std::sin(t) * d[0] + std::cos(t) * d[1];
    const double g = std::sin(t) * d[1] - (1 + alpha) * std::cos(t) * d[0];
    return Eigen::Vector2d(std::pow(r, alpha) * f, std::pow(r, alpha) * g);
  };
  tp.velocity_gradient = [=](const Point& x) {
    const double r = x.norm();
    const double t = angle(x);
    const auto d = psi(t);
    const double st = std::sin(t), ct = std::cos(t);
    const double f = (1 + alpha) * st * d[0] + ct * d[1];
    const double g = st * d[1] - (1 + alpha) * ct * d[0];
    const double df = (1 + alpha) * ct * d[0] + alpha * st * d[1] + ct * d[2];
    const double dg = (1 + alpha) * st * d[0] - alpha * ct * d[1] + st * d[2];
    const double s = std::pow(r, alpha - 1);
    Eigen::Matrix2d m;
    m << s * (alpha * ct * f - st * df), s * (alpha * st * f + ct * df), s * (alpha * ct * g - st * dg),
        s * (alpha * st * g + ct * dg);
    return m;
  };
  tp.pressure = [=](const Point& x) {
    const double r = x.norm();
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    const auto d = psi(angle(x));
    return std::pow(r, alpha - 1) * ((1 + alpha) * (1 + alpha) * d[1] + d[3]) / (1 - alpha);
  };
  tp.force = [](const Point&) { return Eigen::Vector2d(0.0, 0.0); };
  tp.pressure_mean = domain_mean(tp.domain, tp.pressure, tp.singular_corner, 24);
  return tp;
}

TestProblem patch_problem(int p, Domain domain) {
  if (p < kMinDegree) throw ConfigError("patch problem needs p >= 2");
  const Poly stream = sample_poly(p + 1, 0.3);
  const Poly ux = stream.diff(1);
  Poly uy = stream.diff(0);
  for (auto& [e, c] : uy.terms) c = -c;
  const Poly s = sample_poly(p - 1, 1.1);
  const std::array<Poly, 4> du{ux.diff(0), ux.diff(1), uy.diff(0), uy.diff(1)};
  const Poly lap_x = du[0].diff(0), lap_x2 = du[1].diff(1);
  const Poly lap_y = du[2].diff(0), lap_y2 = du[3].diff(1);
  const Poly sx = s.diff(0), sy = s.diff(1);

  TestProblem tp;
  tp.name = "patch";
  tp.domain = domain;
  tp.homogeneous_dirichlet = false;
  tp.velocity = [=](const Point& x) { return Eigen::Vector2d(ux(x), uy(x)); };
  tp.velocity_gradient = [=](const Point& x) {
    Eigen::Matrix2d g;
    g << du[0](x), du[1](x), du[2](x), du[3](x);
    return g;
  };
  tp.pressure = [=](const Point& x) { return s(x); };
  tp.force = [=](const Point& x) {
    return Eigen::Vector2d(-lap_x(x) - lap_x2(x) - sx(x), -lap_y(x) - lap_y2(x) - sy(x));
  };
  tp.pressure_mean = domain_mean(domain, tp.pressure, std::nullopt, p + 2);
  return tp;
}

}  // namespace dfvem

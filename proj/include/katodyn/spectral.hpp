#pragma once

// Finite-difference discretization of -Delta_g + w on 1-D compact models
// (Torus(1), Sphere(1), ConformalCircle) and its dense eigen-decomposition.
//
// In the chart theta with metric e^{2 phi} dtheta^2,
//   Delta_g f = e^{-phi} (e^{-phi} f')',
// discretized on a uniform periodic mesh with mid-point coefficients
// a_{i+1/2} = e^{-phi(theta_{i+1/2})}. With nodal weights m_i = e^{phi_i} h the
// operator is symmetric in the weighted inner product; eigenvectors are
// returned orthonormal in that inner product.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"

namespace katodyn {

struct CircleMesh {
  int n = 0;
  double period = 0.0;  // chart period
  double h = 0.0;
  std::vector<double> theta;   // nodes
  std::vector<double> phi;     // conformal exponent at nodes
  std::vector<double> weight;  // m_i = e^{phi_i} h
};

// Conformal exponent of a 1-D compact model in its chart.
inline double chart_phi(const ManifoldModel& g, double theta) {
  switch (g.kind()) {
    case ModelKind::Sphere: return std::log(g.radius());
    case ModelKind::ConformalCircle: return g.conformal().phi(theta);
    default: return 0.0;
  }
}

inline CircleMesh circle_mesh(const ManifoldModel& g, int n) {
  require(g.is_circle(), "spectral methods need a compact 1-D model");
  require(n >= 8, "spectral mesh must have at least 8 nodes");
  CircleMesh m;
  m.n = n;
  m.period = g.chart_period();
  m.h = m.period / n;
  m.theta.resize(n);
  m.phi.resize(n);
  m.weight.resize(n);
  for (int i = 0; i < n; ++i) {
    m.theta[i] = i * m.h;
    m.phi[i] = chart_phi(g, m.theta[i]);
    m.weight[i] = std::exp(m.phi[i]) * m.h;
  }
  return m;
}

// Periodic linear interpolation stencil: value = (1-a) f[i0] + a f[i1].
struct Stencil {
  int i0 = 0, i1 = 0;
  double a = 0.0;
};

inline Stencil locate(const CircleMesh& m, double theta) {
  const double u = wrap_period(theta, m.period) / m.h;
  int i0 = static_cast<int>(std::floor(u));
  double a = u - i0;
  if (i0 >= m.n) {
    i0 = m.n - 1;
    a = 1.0;
  }
  return {i0, (i0 + 1) % m.n, a};
}

struct CircleEigen {
  CircleMesh mesh;
  Eigen::VectorXd lambda;  // ascending
  Eigen::MatrixXd vec;     // column k: eigenfunction at nodes, weighted-orthonormal
};

// Symmetrized matrix S = M^{1/2} (A + W) M^{-1/2}.
inline Eigen::MatrixXd circle_operator(const ManifoldModel& g, const CircleMesh& m, const std::vector<double>& w) {
  const int n = m.n;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  const double h2 = m.h * m.h;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    const double a = std::exp(-chart_phi(g, m.theta[i] + 0.5 * m.h));
    const double off = -a * std::exp(-0.5 * (m.phi[i] + m.phi[j])) / h2;
    S(i, j) += off;
    S(j, i) += off;
    S(i, i) += a * std::exp(-m.phi[i]) / h2;
    S(j, j) += a * std::exp(-m.phi[j]) / h2;
  }
  if (!w.empty()) {
    require(static_cast<int>(w.size()) == n, "potential node values do not match the mesh");
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(w[i])) throw InvalidArgument("potential is unbounded at a mesh node; mollify it first");
      S(i, i) += w[i];
    }
  }
  return S;
}

inline CircleEigen circle_eigen(const ManifoldModel& g, int n, const std::vector<double>& w = {}) {
  CircleEigen e;
  e.mesh = circle_mesh(g, n);
  Eigen::MatrixXd S = circle_operator(g, e.mesh, w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolve failed");
  e.lambda = solver.eigenvalues();
  e.vec = solver.eigenvectors();
  for (int i = 0; i < n; ++i) e.vec.row(i) /= std::sqrt(e.mesh.weight[i]);
  return e;
}

namespace detail {

// Free-operator decompositions for ConformalCircle kernels, built once per
// (coefficients, mesh).
inline std::shared_ptr<const CircleEigen> conformal_free_eigen(const ManifoldModel& g) {
  using Key = std::tuple<std::vector<double>, std::vector<double>, int>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const CircleEigen>> cache;
  Key key{g.conformal().phi_cos, g.conformal().phi_sin, g.mesh()};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto e = std::make_shared<const CircleEigen>(circle_eigen(g, g.mesh()));
  cache.emplace(key, e);
  return e;
}

}  // namespace detail

}  // namespace katodyn

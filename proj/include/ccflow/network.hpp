#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccflow/demand.hpp"

namespace ccflow {

enum class EdgeKind { Advection, Telegrapher, Euler };

/// Per-edge hyperbolic model. Advection is scalar; the other two carry the
/// conserved pair (U, I) respectively (rho, q).
struct EdgeModel {
  EdgeKind kind = EdgeKind::Advection;

  // advection
  double lambda = 1.0;       // transport speed
  double source_rate = 0.0;  // s in  rho_t + lambda rho_x = s rho

  // telegrapher
  double R = 0.0, L = 1.0, C = 1.0, G = 0.0;

  // euler (isentropic pipe): p(rho) = d^2 rho^beta, source -lf q|q| / (2 D rho)
  double sound_speed = 340.0;
  double beta = 1.0;
  double friction = 0.0;
  double diameter = 0.5;

  int n_comp() const { return kind == EdgeKind::Advection ? 1 : 2; }

  void validate() const {
    switch (kind) {
      case EdgeKind::Advection:
        if (lambda == 0.0) throw std::invalid_argument("advection edge: lambda must be nonzero");
        break;
      case EdgeKind::Telegrapher:
        if (!(L > 0) || !(C > 0) || R < 0 || G < 0)
          throw std::invalid_argument("telegrapher edge: need L>0, C>0, R>=0, G>=0");
        break;
      case EdgeKind::Euler:
        if (!(sound_speed > 0) || !(beta >= 1.0) || !(diameter > 0) || friction < 0)
          throw std::invalid_argument("euler edge: need d>0, beta>=1, D>0, friction>=0");
        break;
    }
  }

  double pressure(double rho) const {
    return sound_speed * sound_speed * std::pow(rho, beta);
  }
  double pressure_deriv(double rho) const {
    return sound_speed * sound_speed * beta * std::pow(rho, beta - 1.0);
  }

  /// Largest characteristic speed magnitude at a state.
  double max_char_speed(const double* q) const {
    switch (kind) {
      case EdgeKind::Advection:
        return std::abs(lambda);
      case EdgeKind::Telegrapher:
        return 1.0 / std::sqrt(L * C);
      case EdgeKind::Euler: {
        double u = q[1] / q[0];
        return std::abs(u) + std::sqrt(pressure_deriv(q[0]));
      }
    }
    return 0.0;
  }

  void flux(const double* q, double* f) const {
    switch (kind) {
      case EdgeKind::Advection:
        f[0] = lambda * q[0];
        break;
      case EdgeKind::Telegrapher:
        f[0] = q[1] / C;
        f[1] = q[0] / L;
        break;
      case EdgeKind::Euler:
        f[0] = q[1];
        f[1] = pressure(q[0]) + q[1] * q[1] / q[0];
        break;
    }
  }

  /// Row-major Jacobian of the flux.
  void flux_jacobian(const double* q, double* jf) const {
    switch (kind) {
      case EdgeKind::Advection:
        jf[0] = lambda;
        break;
      case EdgeKind::Telegrapher:
        jf[0] = 0.0;
        jf[1] = 1.0 / C;
        jf[2] = 1.0 / L;
        jf[3] = 0.0;
        break;
      case EdgeKind::Euler: {
        double u = q[1] / q[0];
        jf[0] = 0.0;
        jf[1] = 1.0;
        jf[2] = pressure_deriv(q[0]) - u * u;
        jf[3] = 2.0 * u;
        break;
      }
    }
  }

  void source(const double* q, double* s) const {
    switch (kind) {
      case EdgeKind::Advection:
        s[0] = source_rate * q[0];
        break;
      case EdgeKind::Telegrapher:
        s[0] = -(G / C) * q[0];
        s[1] = -(R / L) * q[1];
        break;
      case EdgeKind::Euler:
        s[0] = 0.0;
        s[1] = friction == 0.0
                   ? 0.0
                   : -friction * q[1] * std::abs(q[1]) / (2.0 * diameter * q[0]);
        break;
    }
  }

  void source_jacobian(const double* q, double* js) const {
    switch (kind) {
      case EdgeKind::Advection:
        js[0] = source_rate;
        break;
      case EdgeKind::Telegrapher:
        js[0] = -(G / C);
        js[1] = 0.0;
        js[2] = 0.0;
        js[3] = -(R / L);
        break;
      case EdgeKind::Euler:
        js[0] = 0.0;
        js[1] = 0.0;
        if (friction == 0.0) {
          js[2] = js[3] = 0.0;
        } else {
          js[2] = friction * q[1] * std::abs(q[1]) / (2.0 * diameter * q[0] * q[0]);
          js[3] = -friction * std::abs(q[1]) / (diameter * q[0]);
        }
        break;
    }
  }
};

/// Vertex coupling closing the boundary traces meeting at an interior node.
struct CouplingSpec {
  enum class Kind { TelegrapherKirchhoff, GasKirchhoff, GasCompressor, GasWithdrawal };
  Kind kind = Kind::TelegrapherKirchhoff;
};

struct Edge {
  std::string id;
  int from = -1, to = -1;
  double a = 0.0, b = 1.0;
  int cells = 1;
  bool algebraic = false;  // pass-through element, no box dynamics on its cell
  EdgeModel model;

  double dx() const { return (b - a) / cells; }
  int n_nodes() const { return cells + 1; }
};

/// Boundary driver at v_in / v_d: either the inflow control channel or a
/// fixed function of time.
struct BcSource {
  bool is_control = false;
  MeanLevel fixed = MeanLevel::constant(0.0);

  double operator()(double t, double control_value) const {
    return is_control ? control_value : fixed(t);
  }
};

struct Network {
  std::vector<std::string> vertices;
  std::vector<Edge> edges;
  int v_in = -1;
  int v_d = -1;
  std::map<int, CouplingSpec> couplings;  // interior vertices only
  BcSource inflow_bc;                     // at v_in
  BcSource demand_bc;                     // at v_d (ignored for scalar advection)

  int vertex_index(const std::string& name) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown vertex: " + name);
  }

  std::vector<int> incoming(int v) const {
    std::vector<int> r;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].to == v) r.push_back(static_cast<int>(e));
    return r;
  }
  std::vector<int> outgoing(int v) const {
    std::vector<int> r;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].from == v) r.push_back(static_cast<int>(e));
    return r;
  }

  void validate() const {
    if (edges.empty()) throw std::invalid_argument("network: no edges");
    for (const auto& e : edges) {
      e.model.validate();
      if (e.from < 0 || e.to < 0 || e.from >= static_cast<int>(vertices.size()) ||
          e.to >= static_cast<int>(vertices.size()))
        throw std::invalid_argument("network: edge endpoints out of range");
      if (e.cells < 1) throw std::invalid_argument("network: edge needs at least one cell");
      if (!(e.b > e.a)) throw std::invalid_argument("network: edge interval empty");
      if (e.algebraic && e.cells != 1)
        throw std::invalid_argument("network: algebraic elements carry exactly one cell");
    }
    int n_in = 0, n_out = 0;
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      bool has_in = !incoming(static_cast<int>(v)).empty();
      bool has_out = !outgoing(static_cast<int>(v)).empty();
      if (!has_in && has_out) {
        ++n_in;
        if (static_cast<int>(v) != v_in)
          throw std::invalid_argument("network: vertex without inflow edges must be v_in");
      }
      if (has_in && !has_out) {
        ++n_out;
        if (static_cast<int>(v) != v_d)
          throw std::invalid_argument("network: vertex without outflow edges must be v_d");
      }
      if (!has_in && !has_out) throw std::invalid_argument("network: isolated vertex");
    }
    if (n_in != 1 || n_out != 1)
      throw std::invalid_argument("network: exactly one inflow and one demand vertex required");
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      int vi = static_cast<int>(v);
      if (vi == v_in || vi == v_d) continue;
      auto it = couplings.find(vi);
      if (it == couplings.end())
        throw std::invalid_argument("network: interior vertex lacks a coupling spec: " +
                                    vertices[v]);
      if (it->second.kind == CouplingSpec::Kind::GasCompressor ||
          it->second.kind == CouplingSpec::Kind::GasWithdrawal) {
        if (incoming(vi).size() != 1 || outgoing(vi).size() != 1)
          throw std::invalid_argument(
              "network: compressor/withdrawal couplings join exactly one incoming and one "
              "outgoing edge");
      }
    }
  }

  /// Transport delay from v_in to v_d along the fastest path (linear models).
  double transport_delay() const {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(vertices.size(), inf);
    dist[v_in] = 0.0;
    for (std::size_t pass = 0; pass < vertices.size(); ++pass) {
      bool changed = false;
      for (const auto& e : edges) {
        double speed = e.model.kind == EdgeKind::Advection
                           ? std::abs(e.model.lambda)
                           : 1.0 / std::sqrt(e.model.L * e.model.C);
        double cand = dist[e.from] + (e.b - e.a) / speed;
        if (cand < dist[e.to]) {
          dist[e.to] = cand;
          changed = true;
        }
      }
      if (!changed) break;
    }
    return dist[v_d];
  }
};

/// Per-edge initial data: each component is offset + amplitude sin(freq x + phase).
struct InitialSpec {
  std::array<double, 2> offset{0.0, 0.0};
  std::array<double, 2> amplitude{0.0, 0.0};
  std::array<double, 2> freq{0.0, 0.0};
  std::array<double, 2> phase{0.0, 0.0};

  double operator()(int comp, double x) const {
    return offset[comp] + amplitude[comp] * std::sin(freq[comp] * x + phase[comp]);
  }

  static InitialSpec constant2(double c0, double c1) {
    InitialSpec s;
    s.offset = {c0, c1};
    return s;
  }
};

/// Gas-to-power conversion u = eps(S) = a0 + a1 S + a2 S^2.
struct Conversion {
  double a0 = 0.0, a1 = 1.0, a2 = 0.0;

  double operator()(double supply) const { return a0 + (a1 + a2 * supply) * supply; }
  double deriv(double supply) const { return a1 + 2.0 * a2 * supply; }

  /// Inverts eps on its increasing (physical) branch.
  double supply_from_withdrawal(double u) const {
    if (a2 == 0.0) {
      if (a1 == 0.0) throw std::runtime_error("conversion: not invertible (a1 = a2 = 0)");
      return (u - a0) / a1;
    }
    double disc = a1 * a1 - 4.0 * a2 * (a0 - u);
    if (disc < 0.0) throw std::runtime_error("conversion: no real root for withdrawal");
    double root = (-a1 + std::sqrt(disc)) / (2.0 * a2);  // increasing branch for a2 > 0
    if (root < 0.0 && a2 > 0.0) throw std::runtime_error("conversion: no nonnegative root");
    return root;
  }
};

}  // namespace ccflow

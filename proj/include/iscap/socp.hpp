#ifndef ISCAP_SOCP_HPP
#define ISCAP_SOCP_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscap/common.hpp"

namespace iscap {

// Sparse row of coefficients over the decision variables.  Duplicate
// indices are allowed and accumulate.
struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;

  void add(int i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }
  std::size_t nnz() const { return idx.size(); }

  double dot(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[idx[k]];
    return s;
  }
  // out += w * row
  void axpy_into(Eigen::VectorXd& out, double w) const {
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += w * val[k];
  }
  void scale(double w) {
    for (auto& v : val) v *= w;
  }
  static SparseRow from_dense(const Eigen::VectorXd& x, double drop = 0.0) {
    SparseRow r;
    for (int i = 0; i < x.size(); ++i)
      if (std::abs(x[i]) > drop) r.add(i, x[i]);
    return r;
  }
};

struct LinearEquality {
  SparseRow a;
  double rhs = 0.0;
};

// One constraint ||A x + b|| <= c^T x + d.  A may have zero rows, in
// which case this is the linear inequality c^T x + d >= 0.
struct ConeConstraint {
  std::vector<SparseRow> rows;  // A
  Eigen::VectorXd b;            // same length as rows
  SparseRow c;
  double d = 0.0;
};

// minimize objective^T x subject to the equalities and cones.
struct SocpProblem {
  int n = 0;
  Eigen::VectorXd objective;
  std::vector<LinearEquality> equalities;
  std::vector<ConeConstraint> cones;

  void set_num_vars(int vars) {
    check_positive(vars, "number of variables");
    n = vars;
    objective = Eigen::VectorXd::Zero(vars);
  }

  void validate() const {
    check_positive(n, "number of variables");
    if (objective.size() != n)
      throw std::invalid_argument("objective length must equal n");
    auto check_row = [this](const SparseRow& r) {
      for (int i : r.idx)
        if (i < 0 || i >= n)
          throw std::invalid_argument("coefficient index out of range");
    };
    for (const auto& e : equalities) check_row(e.a);
    for (const auto& c : cones) {
      if (static_cast<Eigen::Index>(c.rows.size()) != c.b.size())
        throw std::invalid_argument("cone rows and offset length mismatch");
      for (const auto& r : c.rows) check_row(r);
      check_row(c.c);
    }
  }
};

enum class SocpStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(SocpStatus s) {
  switch (s) {
    case SocpStatus::Optimal: return "optimal";
    case SocpStatus::Infeasible: return "infeasible";
    case SocpStatus::MaxIterations: return "max_iterations";
  }
  return "?";
}

struct SocpSolution {
  Eigen::VectorXd x;
  SocpStatus status = SocpStatus::MaxIterations;
  double objective_value = std::numeric_limits<double>::quiet_NaN();
  double max_violation = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string detail;
};

// Largest violation of the original constraints at x.
inline double socp_violation(const SocpProblem& p, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (const auto& e : p.equalities)
    worst = std::max(worst, std::abs(e.a.dot(x) - e.rhs));
  for (const auto& c : p.cones) {
    double nrm = 0.0;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      const double v = c.rows[i].dot(x) + c.b[static_cast<Eigen::Index>(i)];
      nrm += v * v;
    }
    worst = std::max(worst, std::sqrt(nrm) - (c.c.dot(x) + c.d));
  }
  return worst;
}

namespace socp_detail {

// Internal conic standard form:
//   min c^T x  s.t.  A x = b,  G x + s = h,
//   s in R_+^l x SOC(d_1) x ... x SOC(d_q).
struct StdForm {
  int n = 0, p = 0, m = 0, l = 0;
  Eigen::VectorXd c;
  std::vector<SparseRow> arows;
  Eigen::VectorXd b;
  std::vector<SparseRow> grows;
  Eigen::VectorXd h;
  std::vector<int> soc_dims;
  Eigen::VectorXd col_scale;  // x_original = col_scale .* x_scaled
};

inline StdForm to_std_form(const SocpProblem& prob) {
  StdForm f;
  f.n = prob.n;
  f.c = prob.objective;
  f.p = static_cast<int>(prob.equalities.size());
  f.b.resize(f.p);
  f.arows.reserve(prob.equalities.size());
  for (int i = 0; i < f.p; ++i) {
    f.arows.push_back(prob.equalities[i].a);
    f.b[i] = prob.equalities[i].rhs;
  }
  // Linear rows first.  c^T x + d >= 0 becomes -c^T x + s = d.
  for (const auto& c : prob.cones) {
    if (!c.rows.empty()) continue;
    SparseRow g = c.c;
    g.scale(-1.0);
    f.grows.push_back(std::move(g));
    f.h.conservativeResize(f.h.size() + 1);
    f.h[f.h.size() - 1] = c.d;
    ++f.l;
  }
  // SOC blocks: s = (c^T x + d; A x + b) in SOC(m_i + 1).
  for (const auto& c : prob.cones) {
    if (c.rows.empty()) continue;
    const int dim = static_cast<int>(c.rows.size()) + 1;
    SparseRow g0 = c.c;
    g0.scale(-1.0);
    f.grows.push_back(std::move(g0));
    for (const auto& r : c.rows) {
      SparseRow g = r;
      g.scale(-1.0);
      f.grows.push_back(std::move(g));
    }
    const Eigen::Index base = f.h.size();
    f.h.conservativeResize(base + dim);
    f.h[base] = c.d;
    for (int i = 0; i + 1 < dim; ++i) f.h[base + 1 + i] = c.b[i];
    f.soc_dims.push_back(dim);
  }
  f.m = static_cast<int>(f.grows.size());
  f.col_scale = Eigen::VectorXd::Ones(f.n);
  return f;
}

// Ruiz-style equilibration.  Rows of one SOC share a single scale so
// the cone geometry is preserved; every column gets its own scale.
inline void equilibrate(StdForm& f) {
  const int q = static_cast<int>(f.soc_dims.size());
  const int nblocks = f.p + f.l + q;
  auto block_of_grow = [&](int gi) {
    if (gi < f.l) return f.p + gi;
    int row = f.l, blk = 0;
    while (blk < q && gi >= row + f.soc_dims[blk]) row += f.soc_dims[blk++];
    return f.p + f.l + blk;
  };
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd rnorm = Eigen::VectorXd::Zero(nblocks);
    for (int i = 0; i < f.p; ++i)
      for (double v : f.arows[i].val)
        rnorm[i] = std::max(rnorm[i], std::abs(v));
    for (int gi = 0; gi < f.m; ++gi) {
      const int bi = block_of_grow(gi);
      for (double v : f.grows[gi].val)
        rnorm[bi] = std::max(rnorm[bi], std::abs(v));
    }
    Eigen::VectorXd rs(nblocks);
    for (int i = 0; i < nblocks; ++i)
      rs[i] = (rnorm[i] > 1e-12) ? 1.0 / std::sqrt(rnorm[i]) : 1.0;
    for (int i = 0; i < f.p; ++i) {
      f.arows[i].scale(rs[i]);
      f.b[i] *= rs[i];
    }
    for (int gi = 0; gi < f.m; ++gi) {
      const double w = rs[block_of_grow(gi)];
      f.grows[gi].scale(w);
      f.h[gi] *= w;
    }
    Eigen::VectorXd cnorm = Eigen::VectorXd::Zero(f.n);
    for (const auto& r : f.arows)
      for (std::size_t k = 0; k < r.idx.size(); ++k)
        cnorm[r.idx[k]] = std::max(cnorm[r.idx[k]], std::abs(r.val[k]));
    for (const auto& r : f.grows)
      for (std::size_t k = 0; k < r.idx.size(); ++k)
        cnorm[r.idx[k]] = std::max(cnorm[r.idx[k]], std::abs(r.val[k]));
    Eigen::VectorXd cs(f.n);
    for (int j = 0; j < f.n; ++j)
      cs[j] = (cnorm[j] > 1e-12) ? 1.0 / std::sqrt(cnorm[j]) : 1.0;
    auto scale_cols = [&](SparseRow& r) {
      for (std::size_t k = 0; k < r.idx.size(); ++k) r.val[k] *= cs[r.idx[k]];
    };
    for (auto& r : f.arows) scale_cols(r);
    for (auto& r : f.grows) scale_cols(r);
    for (int j = 0; j < f.n; ++j) {
      f.c[j] *= cs[j];
      f.col_scale[j] *= cs[j];
    }
  }
}

// Nesterov-Todd scaling of one cone block computed from interior s, z.
struct BlockScaling {
  bool linear = false;
  int off = 0, dim = 1;
  double w = 1.0;            // linear: W = w
  double eta = 1.0;          // SOC: W = eta * Wbar
  Eigen::VectorXd wbar;      // SOC hyperbolic point, wbar0^2 - |wbar1|^2 = 1
  Eigen::VectorXd lambda;    // scaled point, lambda = W z = W^-1 s
};

inline double soc_residual(const double* v, int dim) {
  double n1 = 0.0;
  for (int i = 1; i < dim; ++i) n1 += v[i] * v[i];
  return v[0] * v[0] - n1;
}

// W v for the SOC block (eta included).
inline void apply_w(const BlockScaling& sc, const double* v, double* out) {
  const Eigen::VectorXd& w = sc.wbar;
  const int d = sc.dim;
  double dot1 = 0.0;
  for (int i = 1; i < d; ++i) dot1 += w[i] * v[i];
  out[0] = sc.eta * (w[0] * v[0] + dot1);
  const double coef = v[0] + dot1 / (1.0 + w[0]);
  for (int i = 1; i < d; ++i) out[i] = sc.eta * (v[i] + coef * w[i]);
}

// W^-1 v for the SOC block.
inline void apply_w_inv(const BlockScaling& sc, const double* v, double* out) {
  const Eigen::VectorXd& w = sc.wbar;
  const int d = sc.dim;
  double dot1 = 0.0;
  for (int i = 1; i < d; ++i) dot1 += w[i] * v[i];
  const double ie = 1.0 / sc.eta;
  out[0] = ie * (w[0] * v[0] - dot1);
  const double coef = -v[0] + dot1 / (1.0 + w[0]);
  for (int i = 1; i < d; ++i) out[i] = ie * (v[i] + coef * w[i]);
}

// W^2 v = eta^2 (2 wbar (wbar^T v) - J v).
inline void apply_w_sq(const BlockScaling& sc, const double* v, double* out) {
  const Eigen::VectorXd& w = sc.wbar;
  const int d = sc.dim;
  double dot = w[0] * v[0];
  for (int i = 1; i < d; ++i) dot += w[i] * v[i];
  const double e2 = sc.eta * sc.eta;
  out[0] = e2 * (2.0 * dot * w[0] - v[0]);
  for (int i = 1; i < d; ++i) out[i] = e2 * (2.0 * dot * w[i] + v[i]);
}

// W^-2 v = eta^-2 (2 (J wbar) ((J wbar)^T v) - J v).
inline void apply_w_inv_sq(const BlockScaling& sc, const double* v,
                           double* out) {
  const Eigen::VectorXd& w = sc.wbar;
  const int d = sc.dim;
  double dot = w[0] * v[0];
  for (int i = 1; i < d; ++i) dot -= w[i] * v[i];
  const double ie2 = 1.0 / (sc.eta * sc.eta);
  out[0] = ie2 * (2.0 * dot * w[0] - v[0]);
  for (int i = 1; i < d; ++i) out[i] = ie2 * (-2.0 * dot * w[i] + v[i]);
}

// Jordan product u o v and the inverse operation lambda \ v.
inline void jordan_mul(const double* u, const double* v, int d, double* out) {
  double dot = 0.0;
  for (int i = 0; i < d; ++i) dot += u[i] * v[i];
  const double u0 = u[0], v0 = v[0];
  out[0] = dot;
  for (int i = 1; i < d; ++i) out[i] = u0 * v[i] + v0 * u[i];
}

inline void jordan_div(const double* lam, const double* v, int d, double* out) {
  double n1 = 0.0, dot1 = 0.0;
  for (int i = 1; i < d; ++i) {
    n1 += lam[i] * lam[i];
    dot1 += lam[i] * v[i];
  }
  const double det = lam[0] * lam[0] - n1;
  const double u0 = (lam[0] * v[0] - dot1) / det;
  out[0] = u0;
  for (int i = 1; i < d; ++i) out[i] = (v[i] - u0 * lam[i]) / lam[0];
}

// Largest step alpha with v + alpha dv staying in the cone (up to cap).
inline double soc_max_step(const double* v, const double* dv, int d,
                           double cap) {
  double a = dv[0] * dv[0], bq = v[0] * dv[0], c = v[0] * v[0];
  for (int i = 1; i < d; ++i) {
    a -= dv[i] * dv[i];
    bq -= v[i] * dv[i];
    c -= v[i] * v[i];
  }
  bq *= 2.0;
  if (c <= 0.0) return 0.0;  // not interior, caller treats as stuck
  double root = cap;
  if (std::abs(a) < 1e-14) {
    if (bq < 0.0) root = -c / bq;
  } else {
    const double disc = bq * bq - 4.0 * a * c;
    if (a < 0.0 || disc >= 0.0) {
      const double sd = std::sqrt(std::max(disc, 0.0));
      const double q = -0.5 * (bq + (bq >= 0.0 ? sd : -sd));
      double r1 = (std::abs(a) > 0.0) ? q / a : cap;
      double r2 = (std::abs(q) > 0.0) ? c / q : cap;
      if (r1 > r2) std::swap(r1, r2);
      if (r1 > 0.0)
        root = r1;
      else if (r2 > 0.0 && a < 0.0)
        root = r2;
    }
  }
  return std::min(root, cap);
}

struct IpmWork {
  StdForm f;
  std::vector<BlockScaling> blocks;
  Eigen::MatrixXd M;      // G^T W^-2 G + reg
  Eigen::LLT<Eigen::MatrixXd> mllt;
  Eigen::MatrixXd minvet; // M^-1 E^T
  Eigen::MatrixXd schur;  // E M^-1 E^T
  Eigen::LLT<Eigen::MatrixXd> sllt;
  double reg = 0.0;

  void build_blocks() {
    blocks.clear();
    for (int i = 0; i < f.l; ++i) {
      BlockScaling sc;
      sc.linear = true;
      sc.off = i;
      sc.dim = 1;
      blocks.push_back(sc);
    }
    int off = f.l;
    for (int d : f.soc_dims) {
      BlockScaling sc;
      sc.off = off;
      sc.dim = d;
      blocks.push_back(sc);
      off += d;
    }
  }

  // Update NT scalings from the current interior pair (s, z).
  // Returns false if either point has drifted out of the interior.
  bool update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    for (auto& sc : blocks) {
      if (sc.linear) {
        const double si = s[sc.off], zi = z[sc.off];
        if (si <= 0.0 || zi <= 0.0) return false;
        sc.w = std::sqrt(si / zi);
        sc.lambda.resize(1);
        sc.lambda[0] = std::sqrt(si * zi);
        continue;
      }
      const double* sp = s.data() + sc.off;
      const double* zp = z.data() + sc.off;
      const double rs = soc_residual(sp, sc.dim);
      const double rz = soc_residual(zp, sc.dim);
      if (rs <= 0.0 || rz <= 0.0 || sp[0] <= 0.0 || zp[0] <= 0.0) return false;
      const double ts = std::sqrt(rs), tz = std::sqrt(rz);
      double dot = 0.0;
      for (int i = 0; i < sc.dim; ++i) dot += sp[i] * zp[i];
      const double gamma = std::sqrt((1.0 + dot / (ts * tz)) / 2.0);
      sc.wbar.resize(sc.dim);
      sc.wbar[0] = (sp[0] / ts + zp[0] / tz) / (2.0 * gamma);
      for (int i = 1; i < sc.dim; ++i)
        sc.wbar[i] = (sp[i] / ts - zp[i] / tz) / (2.0 * gamma);
      sc.eta = std::sqrt(ts / tz);
      sc.lambda.resize(sc.dim);
      apply_w(sc, zp, sc.lambda.data());
    }
    return true;
  }

  // Assemble M = sum_blocks G_b^T W_b^-2 G_b exploiting row sparsity.
  void assemble_m() {
    const int n = f.n;
    if (M.rows() != n) M.resize(n, n);
    M.setZero();
    std::vector<double> tmp(n, 0.0);
    std::vector<int> touched;
    for (const auto& sc : blocks) {
      if (sc.linear) {
        const SparseRow& g = f.grows[sc.off];
        const double wgt = 1.0 / (sc.w * sc.w);
        for (std::size_t a = 0; a < g.idx.size(); ++a)
          for (std::size_t bb = 0; bb < g.idx.size(); ++bb) {
            if (g.idx[bb] < g.idx[a]) continue;
            M(g.idx[a], g.idx[bb]) += wgt * g.val[a] * g.val[bb];
          }
        continue;
      }
      // R^T W^-2 R = eta^-2 [ 2 (R^T vb)(R^T vb)^T - r0 r0^T + sum_i ri ri^T ]
      const double ie2 = 1.0 / (sc.eta * sc.eta);
      touched.clear();
      for (int i = 0; i < sc.dim; ++i) {
        const SparseRow& g = f.grows[sc.off + i];
        const double vb = (i == 0) ? sc.wbar[0] : -sc.wbar[i];
        for (std::size_t k = 0; k < g.idx.size(); ++k) {
          const int j = g.idx[k];
          if (tmp[j] == 0.0) touched.push_back(j);
          tmp[j] += vb * g.val[k];
        }
        const double sgn = (i == 0) ? -1.0 : 1.0;
        for (std::size_t a = 0; a < g.idx.size(); ++a)
          for (std::size_t bb = 0; bb < g.idx.size(); ++bb) {
            if (g.idx[bb] < g.idx[a]) continue;
            M(g.idx[a], g.idx[bb]) += ie2 * sgn * g.val[a] * g.val[bb];
          }
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (std::size_t a = 0; a < touched.size(); ++a) {
        const int ia = touched[a];
        const double va = 2.0 * ie2 * tmp[ia];
        for (std::size_t bb = a; bb < touched.size(); ++bb)
          M(ia, touched[bb]) += va * tmp[touched[bb]];
      }
      for (int j : touched) tmp[j] = 0.0;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) M(i, j) = M(j, i);
  }

  bool factor() {
    const int n = f.n;
    double base = 0.0;
    for (int i = 0; i < n; ++i) base = std::max(base, M(i, i));
    reg = 1e-10 * (1.0 + base);
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd Mr = M;
      Mr.diagonal().array() += reg;
      mllt.compute(Mr);
      if (mllt.info() == Eigen::Success) {
        if (f.p > 0) {
          Eigen::MatrixXd et = Eigen::MatrixXd::Zero(n, f.p);
          for (int i = 0; i < f.p; ++i)
            for (std::size_t k = 0; k < f.arows[i].idx.size(); ++k)
              et(f.arows[i].idx[k], i) += f.arows[i].val[k];
          minvet = mllt.solve(et);
          schur.resize(f.p, f.p);
          for (int i = 0; i < f.p; ++i)
            for (int j = 0; j < f.p; ++j)
              schur(i, j) = f.arows[i].dot(minvet.col(j));
          schur.diagonal().array() += reg;
          sllt.compute(schur);
          if (sllt.info() != Eigen::Success) {
            reg *= 100.0;
            continue;
          }
        }
        return true;
      }
      reg *= 100.0;
    }
    return false;
  }

  // Solves [0 A^T G^T; A 0 0; G 0 -W^2] (dx; dy; dz) = (rx; ry; rz).
  void solve3(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry,
              const Eigen::VectorXd& rz, Eigen::VectorXd& dx,
              Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
    Eigen::VectorXd wirz(f.m);
    apply_w_inv_sq_all(rz, wirz);
    Eigen::VectorXd rt = rx;
    for (int gi = 0; gi < f.m; ++gi) f.grows[gi].axpy_into(rt, wirz[gi]);
    const Eigen::VectorXd t1 = mllt.solve(rt);
    if (f.p > 0) {
      Eigen::VectorXd et1(f.p);
      for (int i = 0; i < f.p; ++i) et1[i] = f.arows[i].dot(t1);
      dy = sllt.solve(et1 - ry);
      dx = t1 - minvet * dy;
    } else {
      dy.resize(0);
      dx = t1;
    }
    Eigen::VectorXd gx(f.m);
    for (int gi = 0; gi < f.m; ++gi) gx[gi] = f.grows[gi].dot(dx);
    gx -= rz;
    dz.resize(f.m);
    apply_w_inv_sq_all(gx, dz);
  }

  void apply_w_inv_sq_all(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.resize(f.m);
    for (const auto& sc : blocks) {
      if (sc.linear)
        out[sc.off] = v[sc.off] / (sc.w * sc.w);
      else
        apply_w_inv_sq(sc, v.data() + sc.off, out.data() + sc.off);
    }
  }
  void apply_w_sq_all(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.resize(f.m);
    for (const auto& sc : blocks) {
      if (sc.linear)
        out[sc.off] = v[sc.off] * sc.w * sc.w;
      else
        apply_w_sq(sc, v.data() + sc.off, out.data() + sc.off);
    }
  }
  void apply_w_all(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.resize(f.m);
    for (const auto& sc : blocks) {
      if (sc.linear)
        out[sc.off] = v[sc.off] * sc.w;
      else
        apply_w(sc, v.data() + sc.off, out.data() + sc.off);
    }
  }
  void apply_w_inv_all(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.resize(f.m);
    for (const auto& sc : blocks) {
      if (sc.linear)
        out[sc.off] = v[sc.off] / sc.w;
      else
        apply_w_inv(sc, v.data() + sc.off, out.data() + sc.off);
    }
  }

  double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                  double cap) const {
    double a = cap;
    for (const auto& sc : blocks) {
      if (sc.linear) {
        if (dv[sc.off] < 0.0) a = std::min(a, -v[sc.off] / dv[sc.off]);
      } else {
        a = std::min(a, soc_max_step(v.data() + sc.off, dv.data() + sc.off,
                                     sc.dim, cap));
      }
    }
    return a;
  }
};

// Degenerate problem with no cone constraints: an equality-constrained
// LP.  Bounded iff the objective is orthogonal to the feasible null
// space; solved at the least-norm feasible point.
inline SocpSolution solve_linear_only(const SocpProblem& prob,
                                      const StdForm& f, double tol) {
  SocpSolution sol;
  sol.iterations = 0;
  const int n = f.n, p = f.p;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd cres = f.c;
  if (p > 0) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, n);
    for (int i = 0; i < p; ++i)
      for (std::size_t k = 0; k < f.arows[i].idx.size(); ++k)
        A(i, f.arows[i].idx[k]) += f.arows[i].val[k];
    const auto cod = A.completeOrthogonalDecomposition();
    x = cod.solve(f.b);  // least-norm feasible point
    if ((A * x - f.b).lpNorm<Eigen::Infinity>() >
        1e-8 * (1.0 + f.b.lpNorm<Eigen::Infinity>())) {
      sol.status = SocpStatus::Infeasible;
      sol.detail = "inconsistent equalities";
      sol.x = Eigen::VectorXd::Zero(n);
      sol.max_violation = socp_violation(prob, sol.x);
      return sol;
    }
    // Bounded iff the objective is orthogonal to null(A).
    const Eigen::VectorXd y =
        A.transpose().completeOrthogonalDecomposition().solve(f.c);
    cres = f.c - A.transpose() * y;
  }
  if (cres.lpNorm<Eigen::Infinity>() >
      std::max(tol, 1e-10) * (1.0 + f.c.lpNorm<Eigen::Infinity>())) {
    sol.status = SocpStatus::Infeasible;
    sol.detail = "dual infeasible (objective unbounded below)";
    sol.x = Eigen::VectorXd::Zero(n);
    sol.max_violation = socp_violation(prob, sol.x);
    return sol;
  }
  sol.x = f.col_scale.cwiseProduct(x);
  sol.status = SocpStatus::Optimal;
  sol.objective_value = prob.objective.dot(sol.x);
  sol.max_violation = socp_violation(prob, sol.x);
  return sol;
}

}  // namespace socp_detail

// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
// `tol` bounds the relative duality gap and the scaled residuals.
inline SocpSolution solve_socp(const SocpProblem& prob, double tol = 1e-8,
                               int max_iters = 100) {
  using namespace socp_detail;
  prob.validate();
  check_positive(tol, "tol");
  check_positive(max_iters, "max_iters");

  StdForm f = to_std_form(prob);
  if (f.m == 0) return solve_linear_only(prob, f, tol);
  equilibrate(f);

  IpmWork wk;
  wk.f = std::move(f);
  wk.build_blocks();
  const StdForm& sf = wk.f;
  const int n = sf.n, p = sf.p, m = sf.m;
  const double nu = static_cast<double>(sf.l) + 2.0 * sf.soc_dims.size();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s(m), z(m);
  s.setZero();
  z.setZero();
  for (const auto& sc : wk.blocks) {
    s[sc.off] = 1.0;
    z[sc.off] = 1.0;
  }
  double tau = 1.0, kappa = 1.0;
  // Least-squares start: with the identity scaling, the primal solve
  // gives the minimum-norm slack for A x = b, G x + s = h and the dual
  // solve fits A^T y + G^T z = -c; each cone point is then nudged just
  // inside the interior.  This picks up the scale of b and h, where a
  // cold unit start stalls at the numerical floor whenever the data
  // carries a large constant (a generous power cap, say) because the
  // first iterations are spent only on rescaling.
  if (wk.update_scalings(s, z)) {
    wk.assemble_m();
    if (wk.factor()) {
      Eigen::VectorXd px, py, pz, qx, qy, qz;
      wk.solve3(Eigen::VectorXd::Zero(n), sf.b, sf.h, px, py, pz);
      wk.solve3(-sf.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), qx,
                qy, qz);
      x = px;
      if (p) y = qy;
      s = -pz;
      z = qz;
      auto shift_interior = [&](Eigen::VectorXd& v) {
        double t = -std::numeric_limits<double>::infinity();
        for (const auto& sc : wk.blocks) {
          if (sc.linear) {
            t = std::max(t, -v[sc.off]);
            continue;
          }
          double n1 = 0.0;
          for (int i = 1; i < sc.dim; ++i) n1 += v[sc.off + i] * v[sc.off + i];
          t = std::max(t, std::sqrt(n1) - v[sc.off]);
        }
        if (t >= 0.0)
          for (const auto& sc : wk.blocks) v[sc.off] += 1.0 + t;
      };
      shift_interior(s);
      shift_interior(z);
    }
  }

  const double bnorm = p ? sf.b.lpNorm<Eigen::Infinity>() : 0.0;
  const double hnorm = sf.h.lpNorm<Eigen::Infinity>();
  const double cnorm = sf.c.lpNorm<Eigen::Infinity>();

  SocpSolution sol;
  double best_score = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = x;
  double best_tau = tau;
  int no_improve = 0;

  Eigen::VectorXd hx(n), hy(p), hz(m);
  Eigen::VectorXd u2x, u2y, u2z, u1x, u1y, u1z;
  Eigen::VectorXd ds(m), dz(m), dsa(m), dza(m), dxa, dya;
  Eigen::VectorXd lam_sq(m), wds(m), tmpm(m);

  int iter = 0;
  for (; iter < max_iters; ++iter) {
    // Residuals of the homogeneous model.
    hx = sf.c * tau;
    for (int i = 0; i < p; ++i) sf.arows[i].axpy_into(hx, y[i]);
    for (int gi = 0; gi < m; ++gi) sf.grows[gi].axpy_into(hx, z[gi]);
    for (int i = 0; i < p; ++i) hy[i] = sf.arows[i].dot(x) - sf.b[i] * tau;
    for (int gi = 0; gi < m; ++gi)
      hz[gi] = sf.grows[gi].dot(x) + s[gi] - sf.h[gi] * tau;
    const double cx = sf.c.dot(x);
    const double by = p ? sf.b.dot(y) : 0.0;
    const double hzv = sf.h.dot(z);
    const double htau = kappa + cx + by + hzv;

    const double gap = s.dot(z);
    const double mu = (gap + tau * kappa) / (nu + 1.0);

    // Convergence bookkeeping on the de-homogenized point.
    const double pres =
        std::max(p ? hy.lpNorm<Eigen::Infinity>() / (1.0 + bnorm) : 0.0,
                 hz.lpNorm<Eigen::Infinity>() / (1.0 + hnorm)) /
        tau;
    const double dres = hx.lpNorm<Eigen::Infinity>() / (1.0 + cnorm) / tau;
    const double pcost = cx / tau;
    const double agap = gap / (tau * tau);
    const double rgap = agap / std::max(1.0, std::abs(pcost));
    const double score = std::max({pres, dres, rgap});
    if (score < best_score) {
      best_score = score;
      best_x = x;
      best_tau = tau;
      no_improve = 0;
    } else if (++no_improve >= 8) {
      // Numerical floor reached: residuals no longer improve and tend
      // to diverge once mu falls below machine precision.
      break;
    }
    if (pres <= tol && dres <= tol && (rgap <= tol || agap <= tol * 1e-2)) {
      sol.status = SocpStatus::Optimal;
      best_x = x;
      best_tau = tau;
      break;
    }
    // Infeasibility certificates.
    const double iota = -(by + hzv);
    if (iota > 1e-14) {
      Eigen::VectorXd atygz = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < p; ++i) sf.arows[i].axpy_into(atygz, y[i]);
      for (int gi = 0; gi < m; ++gi) sf.grows[gi].axpy_into(atygz, z[gi]);
      if (atygz.lpNorm<Eigen::Infinity>() <= std::max(tol, 1e-10) * iota) {
        sol.status = SocpStatus::Infeasible;
        sol.detail = "primal infeasible";
        break;
      }
    }
    if (-cx > 1e-14) {
      double nax = 0.0;
      for (int i = 0; i < p; ++i)
        nax = std::max(nax, std::abs(sf.arows[i].dot(x)));
      double ngxs = 0.0;
      for (int gi = 0; gi < m; ++gi)
        ngxs = std::max(ngxs, std::abs(sf.grows[gi].dot(x) + s[gi]));
      if (std::max(nax, ngxs) <= std::max(tol, 1e-10) * (-cx)) {
        sol.status = SocpStatus::Infeasible;
        sol.detail = "dual infeasible (objective unbounded below)";
        break;
      }
    }

    if (!wk.update_scalings(s, z)) break;
    wk.assemble_m();
    if (!wk.factor()) break;

    // Common second solve: RHS (-c; b; h).
    wk.solve3(-sf.c, sf.b, sf.h, u2x, u2y, u2z);
    const double denom_base = sf.c.dot(u2x) + (p ? sf.b.dot(u2y) : 0.0) +
                              sf.h.dot(u2z) - kappa / tau;

    auto take_step = [&](const Eigen::VectorXd& dsv, double w1, double dk_extra,
                         double sigma_mu, Eigen::VectorXd& out_dx,
                         Eigen::VectorXd& out_dy, Eigen::VectorXd& out_dz,
                         Eigen::VectorXd& out_ds, double& out_dtau,
                         double& out_dkappa) {
      // dsv holds d_s in scaled space; build rz_eff = -w1*hz - W(lam \ d_s).
      Eigen::VectorXd lamdiv(m);
      for (const auto& sc : wk.blocks) {
        if (sc.linear)
          lamdiv[sc.off] = dsv[sc.off] / sc.lambda[0];
        else
          jordan_div(sc.lambda.data(), dsv.data() + sc.off, sc.dim,
                     lamdiv.data() + sc.off);
      }
      wk.apply_w_all(lamdiv, wds);
      Eigen::VectorXd rzeff = -w1 * hz - wds;
      Eigen::VectorXd rxeff = -w1 * hx;
      Eigen::VectorXd ryeff = -w1 * hy;
      wk.solve3(rxeff, ryeff, rzeff, u1x, u1y, u1z);
      const double dkap_rhs = -tau * kappa + dk_extra + sigma_mu;
      const double num = -w1 * htau - dkap_rhs / tau -
                         (sf.c.dot(u1x) + (p ? sf.b.dot(u1y) : 0.0) +
                          sf.h.dot(u1z));
      const double dtau =
          (std::abs(denom_base) > 1e-14) ? num / denom_base : 0.0;
      out_dx = u1x + dtau * u2x;
      if (p) out_dy = u1y + dtau * u2y; else out_dy.resize(0);
      out_dz = u1z + dtau * u2z;
      // ds = W(lam \ d_s) - W^2 dz
      wk.apply_w_sq_all(out_dz, tmpm);
      out_ds = wds - tmpm;
      out_dtau = dtau;
      out_dkappa = (dkap_rhs - kappa * dtau) / tau;
    };

    // Affine (predictor) direction: d_s = -lam o lam.
    for (const auto& sc : wk.blocks) {
      if (sc.linear) {
        lam_sq[sc.off] = -sc.lambda[0] * sc.lambda[0];
      } else {
        jordan_mul(sc.lambda.data(), sc.lambda.data(), sc.dim,
                   lam_sq.data() + sc.off);
        for (int i = 0; i < sc.dim; ++i) lam_sq[sc.off + i] *= -1.0;
      }
    }
    double dtau_a, dkap_a;
    take_step(lam_sq, 1.0, 0.0, 0.0, dxa, dya, dza, dsa, dtau_a, dkap_a);
    double alpha_a = wk.max_step(s, dsa, 1.0);
    alpha_a = std::min(alpha_a, wk.max_step(z, dza, 1.0));
    if (dtau_a < 0.0) alpha_a = std::min(alpha_a, -tau / dtau_a);
    if (dkap_a < 0.0) alpha_a = std::min(alpha_a, -kappa / dkap_a);

    const double mu_aff =
        ((s + alpha_a * dsa).dot(z + alpha_a * dza) +
         (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkap_a)) /
        (nu + 1.0);
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(std::max(sigma, 1e-8), 0.999);

    // Combined (corrector) direction with Mehrotra second-order term:
    // d_s = -lam o lam - (W^-1 ds_aff) o (W dz_aff) + sigma mu e.
    Eigen::VectorXd winv_ds(m), w_dz(m), corr(m);
    wk.apply_w_inv_all(dsa, winv_ds);
    wk.apply_w_all(dza, w_dz);
    for (const auto& sc : wk.blocks) {
      if (sc.linear) {
        corr[sc.off] = winv_ds[sc.off] * w_dz[sc.off];
      } else {
        jordan_mul(winv_ds.data() + sc.off, w_dz.data() + sc.off, sc.dim,
                   corr.data() + sc.off);
      }
    }
    Eigen::VectorXd dsv = lam_sq - corr;
    const double smu = sigma * mu;
    for (const auto& sc : wk.blocks) dsv[sc.off] += smu;
    double dtau_c, dkap_c;
    Eigen::VectorXd dxc, dyc;
    take_step(dsv, 1.0 - sigma, -dtau_a * dkap_a, smu, dxc, dyc, dz, ds,
              dtau_c, dkap_c);

    double alpha = wk.max_step(s, ds, 10.0);
    alpha = std::min(alpha, wk.max_step(z, dz, 10.0));
    if (dtau_c < 0.0) alpha = std::min(alpha, -tau / dtau_c);
    if (dkap_c < 0.0) alpha = std::min(alpha, -kappa / dkap_c);
    alpha = std::min(0.99 * alpha, 1.0);
    if (alpha <= 1e-9) break;  // stalled

    x += alpha * dxc;
    if (p) y += alpha * dyc;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau_c;
    kappa += alpha * dkap_c;
  }

  sol.iterations = std::min(iter + 1, max_iters);
  // Accept a near-solution if the best iterate came within a whisker.
  if (sol.status == SocpStatus::MaxIterations && best_score <= 20.0 * tol)
    sol.status = SocpStatus::Optimal;
  if (sol.status == SocpStatus::Infeasible) {
    sol.x = Eigen::VectorXd::Zero(n);
    sol.max_violation = socp_violation(prob, sol.x);
  } else {
    sol.x = sf.col_scale.cwiseProduct(best_x) / best_tau;
    sol.objective_value = prob.objective.dot(sol.x);
    sol.max_violation = socp_violation(prob, sol.x);
    if (sol.status == SocpStatus::MaxIterations)
      sol.detail = "no progress within iteration budget";
  }
  return sol;
}

// Writes the problem as documented triples "<row id> <column> <value>".
// Row ids: 0 is the objective; 1..p are equalities; the remaining ids
// are cone rows in declaration order, the scalar side first within
// each cone.  Column -1 carries the constant term of a row.
inline void dump_socp(const SocpProblem& prob, const std::string& path) {
  prob.validate();
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open dump path " + path);
  out << "# socp triplet dump\n";
  out << "# vars " << prob.n << " equalities " << prob.equalities.size()
      << " cones " << prob.cones.size() << "\n";
  out << "# row 0: objective; rows 1.." << prob.equalities.size()
      << ": equalities (col -1 = rhs)\n";
  char buf[64];
  auto emit = [&](int row, int col, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << row << " " << col << " " << buf << "\n";
  };
  for (int j = 0; j < prob.n; ++j)
    if (prob.objective[j] != 0.0) emit(0, j, prob.objective[j]);
  int row = 1;
  for (const auto& e : prob.equalities) {
    for (std::size_t k = 0; k < e.a.idx.size(); ++k)
      emit(row, e.a.idx[k], e.a.val[k]);
    if (e.rhs != 0.0) emit(row, -1, e.rhs);
    ++row;
  }
  int cone_id = 0;
  for (const auto& c : prob.cones) {
    out << "# cone " << cone_id++ << " first_row " << row << " dim "
        << (c.rows.size() + 1) << " (scalar side first)\n";
    for (std::size_t k = 0; k < c.c.idx.size(); ++k)
      emit(row, c.c.idx[k], c.c.val[k]);
    if (c.d != 0.0) emit(row, -1, c.d);
    ++row;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      for (std::size_t k = 0; k < c.rows[i].idx.size(); ++k)
        emit(row, c.rows[i].idx[k], c.rows[i].val[k]);
      if (c.b[static_cast<Eigen::Index>(i)] != 0.0)
        emit(row, -1, c.b[static_cast<Eigen::Index>(i)]);
      ++row;
    }
  }
}

}  // namespace iscap

#endif  // ISCAP_SOCP_HPP

#include "auxcell/mma.hpp"

#include <cmath>

#include "auxcell/errors.hpp"

namespace auxcell {

MmaOptimizer::MmaOptimizer(int nVars, int nCons, VecX xmin, VecX xmax)
    : n_(nVars), m_(nCons), xmin_(std::move(xmin)), xmax_(std::move(xmax)) {
  xold1_ = VecX::Zero(n_);
  xold2_ = VecX::Zero(n_);
  low_ = VecX::Zero(n_);
  upp_ = VecX::Zero(n_);
  a_ = VecX::Zero(m_);
  c_ = VecX::Constant(m_, 1000.0);
  d_ = VecX::Ones(m_);
}

namespace {

// Primal-dual interior Newton for the separable subproblem
//   min sum(p0/(u-x) + q0/(x-l)) + a0 z + sum(c y + d y^2/2)
//   st  P(1/(u-x)) + Q(1/(x-l)) - a z - y <= b, alfa <= x <= beta, y,z >= 0.
struct SubSolver {
  int n, m;
  const VecX &low, &upp, &alfa, &beta, &p0, &q0;
  const MatX &P, &Q;
  const VecX &a, &b, &c, &d;
  double a0;

  VecX x, y, lam, xsi, eta, mu, s;
  double z = 1.0, zet = 1.0;

  void solve() {
    const double epsimin = 1e-9;
    x = 0.5 * (alfa + beta);
    y = VecX::Ones(m);
    z = 1.0;
    lam = VecX::Ones(m);
    xsi = ((x - alfa).cwiseInverse()).cwiseMax(1.0);
    eta = ((beta - x).cwiseInverse()).cwiseMax(1.0);
    mu = (0.5 * c).cwiseMax(1.0);
    zet = 1.0;
    s = VecX::Ones(m);

    double epsi = 1.0;
    while (epsi > epsimin) {
      double residunorm, residumax;
      residual(epsi, residunorm, residumax);
      int ittt = 0;
      while (residumax > 0.9 * epsi && ittt < 200) {
        ++ittt;
        newton_step(epsi, residunorm, residumax);
      }
      epsi *= 0.1;
    }
  }

  void psi_terms(VecX& ux1, VecX& xl1, VecX& plam, VecX& qlam, VecX& gvec) const {
    ux1 = upp - x;
    xl1 = x - low;
    plam = p0 + P.transpose() * lam;
    qlam = q0 + Q.transpose() * lam;
    gvec = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse();
  }

  void residual(double epsi, double& norm2, double& maxabs) const {
    VecX ux1, xl1, plam, qlam, gvec;
    psi_terms(ux1, xl1, plam, qlam, gvec);
    const VecX dpsidx =
        plam.cwiseQuotient(ux1.cwiseProduct(ux1)) - qlam.cwiseQuotient(xl1.cwiseProduct(xl1));

    double acc = 0.0, mx = 0.0;
    auto take = [&](double v) {
      acc += v * v;
      mx = std::max(mx, std::abs(v));
    };
    for (int j = 0; j < n; ++j) take(dpsidx[j] - xsi[j] + eta[j]);
    for (int i = 0; i < m; ++i) take(c[i] + d[i] * y[i] - mu[i] - lam[i]);
    take(a0 - zet - a.dot(lam));
    for (int i = 0; i < m; ++i) take(gvec[i] - a[i] * z - y[i] + s[i] - b[i]);
    for (int j = 0; j < n; ++j) take(xsi[j] * (x[j] - alfa[j]) - epsi);
    for (int j = 0; j < n; ++j) take(eta[j] * (beta[j] - x[j]) - epsi);
    for (int i = 0; i < m; ++i) take(mu[i] * y[i] - epsi);
    take(zet * z - epsi);
    for (int i = 0; i < m; ++i) take(lam[i] * s[i] - epsi);
    norm2 = std::sqrt(acc);
    maxabs = mx;
  }

  void newton_step(double epsi, double& residunorm, double& residumax) {
    VecX ux1, xl1, plam, qlam, gvec;
    psi_terms(ux1, xl1, plam, qlam, gvec);
    const VecX ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
    const VecX ux3 = ux2.cwiseProduct(ux1), xl3 = xl2.cwiseProduct(xl1);
    const VecX dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);

    // GG(i,:) = P(i,:)/ux2 - Q(i,:)/xl2
    MatX GG(m, n);
    for (int i = 0; i < m; ++i)
      GG.row(i) = P.row(i).transpose().cwiseQuotient(ux2).transpose() -
                  Q.row(i).transpose().cwiseQuotient(xl2).transpose();

    const VecX xa = x - alfa, bx = beta - x;
    const VecX delx = dpsidx - epsi * xa.cwiseInverse() + epsi * bx.cwiseInverse();
    const VecX dely = c + d.cwiseProduct(y) - lam - epsi * y.cwiseInverse();
    const double delz = a0 - a.dot(lam) - epsi / z;
    const VecX dellam = gvec - a * z - y - b + epsi * lam.cwiseInverse();

    const VecX diagx = 2.0 * (plam.cwiseQuotient(ux3) + qlam.cwiseQuotient(xl3)) +
                       xsi.cwiseQuotient(xa) + eta.cwiseQuotient(bx);
    const VecX diagy = d + mu.cwiseQuotient(y);
    const VecX diaglam = s.cwiseQuotient(lam);
    const VecX diaglamyi = diaglam + diagy.cwiseInverse();

    // m << n: condense onto (lam, z)
    const VecX dxdiag = delx.cwiseQuotient(diagx);
    VecX blam = dellam + dely.cwiseQuotient(diagy) - GG * dxdiag;
    MatX AA(m + 1, m + 1);
    AA.topLeftCorner(m, m) =
        MatX(diaglamyi.asDiagonal()) + GG * diagx.cwiseInverse().asDiagonal() * GG.transpose();
    AA.topRightCorner(m, 1) = a;
    AA.bottomLeftCorner(1, m) = a.transpose();
    AA(m, m) = -zet / z;
    VecX bb(m + 1);
    bb.head(m) = blam;
    bb[m] = delz;
    const VecX solut = AA.fullPivLu().solve(bb);
    const VecX dlam = solut.head(m);
    const double dz = solut[m];
    const VecX dx = -dxdiag - (GG.transpose() * dlam).cwiseQuotient(diagx);

    const VecX dy = -dely.cwiseQuotient(diagy) + dlam.cwiseQuotient(diagy);
    const VecX dxsi =
        -xsi + epsi * xa.cwiseInverse() - xsi.cwiseProduct(dx).cwiseQuotient(xa);
    const VecX deta =
        -eta + epsi * bx.cwiseInverse() + eta.cwiseProduct(dx).cwiseQuotient(bx);
    const VecX dmu = -mu + epsi * y.cwiseInverse() - mu.cwiseProduct(dy).cwiseQuotient(y);
    const double dzet = -zet + epsi / z - zet * dz / z;
    const VecX ds = -s + epsi * lam.cwiseInverse() - s.cwiseProduct(dlam).cwiseQuotient(lam);

    // step length: keep all slacks positive
    double stminv = 1.0;
    auto bound = [&stminv](double dv, double v) {
      stminv = std::max(stminv, -1.01 * dv / v);
    };
    for (int i = 0; i < m; ++i) {
      bound(dy[i], y[i]);
      bound(dlam[i], lam[i]);
      bound(dmu[i], mu[i]);
      bound(ds[i], s[i]);
    }
    bound(dz, z);
    bound(dzet, zet);
    for (int j = 0; j < n; ++j) {
      bound(dxsi[j], xsi[j]);
      bound(deta[j], eta[j]);
      bound(dx[j], xa[j]);
      bound(-dx[j], bx[j]);
    }
    double steg = 1.0 / stminv;

    const VecX xo = x, yo = y, lamo = lam, xsio = xsi, etao = eta, muo = mu, so = s;
    const double zo = z, zeto = zet;
    double resinew = 2.0 * residunorm;
    for (int itto = 0; itto < 50 && resinew > residunorm; ++itto) {
      x = xo + steg * dx;
      y = yo + steg * dy;
      z = zo + steg * dz;
      lam = lamo + steg * dlam;
      xsi = xsio + steg * dxsi;
      eta = etao + steg * deta;
      mu = muo + steg * dmu;
      zet = zeto + steg * dzet;
      s = so + steg * ds;
      double mx;
      residual(epsi, resinew, mx);
      residumax = mx;
      steg *= 0.5;
    }
    residunorm = resinew;
  }
};

}  // namespace

VecX MmaOptimizer::update(const VecX& x, const VecX& df0dx, const VecX& fval,
                          const MatX& dfdx, MmaSubproblem* info) {
  if (x.size() != n_ || df0dx.size() != n_ || fval.size() != m_ || dfdx.rows() != m_ ||
      dfdx.cols() != n_)
    throw ConfigError("MMA update called with inconsistent sizes");
  if (!df0dx.allFinite() || !fval.allFinite() || !dfdx.allFinite())
    throw ConfigError("MMA update called with non-finite values");

  ++iter_;
  const VecX range = (xmax_ - xmin_).cwiseMax(1e-5);

  if (iter_ <= 2) {
    low_ = x - asyinit_ * range;
    upp_ = x + asyinit_ * range;
  } else {
    for (int j = 0; j < n_; ++j) {
      const double zzz = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
      const double f = zzz > 0 ? asyincr_ : (zzz < 0 ? asydecr_ : 1.0);
      low_[j] = x[j] - f * (xold1_[j] - low_[j]);
      upp_[j] = x[j] + f * (upp_[j] - xold1_[j]);
      low_[j] = std::max(low_[j], x[j] - 10.0 * range[j]);
      low_[j] = std::min(low_[j], x[j] - 0.01 * range[j]);
      upp_[j] = std::min(upp_[j], x[j] + 10.0 * range[j]);
      upp_[j] = std::max(upp_[j], x[j] + 0.01 * range[j]);
    }
  }
  xold2_ = xold1_;
  xold1_ = x;

  VecX alfa(n_), beta(n_);
  for (int j = 0; j < n_; ++j) {
    alfa[j] = std::max({xmin_[j], low_[j] + albefa_ * (x[j] - low_[j]),
                        x[j] - move_ * range[j]});
    beta[j] = std::min({xmax_[j], upp_[j] - albefa_ * (upp_[j] - x[j]),
                        x[j] + move_ * range[j]});
  }

  const VecX ux1 = upp_ - x, xl1 = x - low_;
  const VecX ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
  const VecX rangeInv = range.cwiseInverse();

  VecX p0(n_), q0(n_);
  for (int j = 0; j < n_; ++j) {
    const double dp = std::max(df0dx[j], 0.0), dm = std::max(-df0dx[j], 0.0);
    const double pq = 0.001 * (dp + dm) + raa0_ * rangeInv[j];
    p0[j] = (dp + pq) * ux2[j];
    q0[j] = (dm + pq) * xl2[j];
  }
  MatX P(m_, n_), Q(m_, n_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < n_; ++j) {
      const double dp = std::max(dfdx(i, j), 0.0), dm = std::max(-dfdx(i, j), 0.0);
      const double pq = 0.001 * (dp + dm) + raa0_ * rangeInv[j];
      P(i, j) = (dp + pq) * ux2[j];
      Q(i, j) = (dm + pq) * xl2[j];
    }
  const VecX b = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse() - fval;

  SubSolver sub{n_, m_, low_, upp_, alfa, beta, p0, q0, P, Q, a_, b, c_, d_, a0_,
                {}, {}, {}, {}, {}, {}, {}};
  sub.solve();

  if (info) {
    info->low = low_;
    info->upp = upp_;
    info->alfa = alfa;
    info->beta = beta;
    info->p0 = p0;
    info->q0 = q0;
    info->P = P;
    info->Q = Q;
    info->b = b;
    info->x = sub.x;
    info->lam = sub.lam;
    info->xsi = sub.xsi;
    info->eta = sub.eta;
  }
  return sub.x;
}

}  // namespace auxcell

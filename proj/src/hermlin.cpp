#include "rscdma/hermlin.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rscdma
{

namespace
{

CMat symmetrized(const CMat &m)
{
    if (m.rows() != m.cols())
        throw DimMismatch("HermMat: matrix is not square");
    CMat out = 0.5 * (m + m.adjoint());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        out(i, i) = cd(out(i, i).real(), 0.0);
    // Copy the upper triangle onto the lower one so the Hermitian relation
    // holds without rounding differences.
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = j + 1; i < out.rows(); ++i)
            out(i, j) = std::conj(out(j, i));
    return out;
}

void require_same_dim(const HermMat &a, const HermMat &b, const char *what)
{
    if (a.dim() != b.dim())
        throw DimMismatch(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()) + ")");
}

} // namespace

HermMat::HermMat(const CMat &m) : m_(symmetrized(m)) {}

HermMat HermMat::identity(Eigen::Index n, double scale)
{
    return HermMat(CMat::Identity(n, n) * scale);
}

HermMat HermMat::zero(Eigen::Index n)
{
    return HermMat(CMat::Zero(n, n));
}

HermMat HermMat::operator+(const HermMat &o) const
{
    return HermMat(m_ + o.m_);
}

HermMat HermMat::operator-(const HermMat &o) const
{
    return HermMat(m_ - o.m_);
}

HermMat HermMat::operator*(double s) const
{
    return HermMat(m_ * s);
}

HermEigen eig(const HermMat &a)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(a.matrix());
    return {es.eigenvalues(), es.eigenvectors()};
}

double min_eig(const HermMat &a)
{
    if (a.dim() == 1)
        return a(0, 0).real();
    return Eigen::SelfAdjointEigenSolver<CMat>(a.matrix(), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double spectral_norm(const HermMat &a)
{
    if (a.dim() == 1)
        return std::abs(a(0, 0).real());
    const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(a.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

bool is_positive_definite(const HermMat &a)
{
    const double tr = a.trace();
    if (!(tr > 0.0))
        return false;
    return min_eig(a) > kEpsPd * tr / static_cast<double>(a.dim());
}

void require_pd(const HermMat &a, const char *what)
{
    if (!is_positive_definite(a))
        throw NotPositiveDefinite(std::string(what) + ": matrix is not positive definite (min eig " +
                                  std::to_string(min_eig(a)) + ")");
}

HermMat herm_sqrt(const HermMat &a)
{
    require_pd(a, "herm_sqrt");
    const HermEigen e = eig(a);
    const RVec s = e.values.cwiseSqrt();
    return HermMat(e.vectors * s.asDiagonal() * e.vectors.adjoint());
}

CMat psd_sqrt(const HermMat &a)
{
    const HermEigen e = eig(a);
    const RVec s = e.values.cwiseMax(0.0).cwiseSqrt();
    return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

HermMat herm_inverse(const HermMat &a)
{
    require_pd(a, "herm_inverse");
    if (a.dim() == 1)
        return HermMat(CMat::Constant(1, 1, 1.0 / a(0, 0).real()));
    const HermEigen e = eig(a);
    const RVec inv = e.values.cwiseInverse();
    return HermMat(e.vectors * inv.asDiagonal() * e.vectors.adjoint());
}

double logdet(const HermMat &a)
{
    require_pd(a, "logdet");
    if (a.dim() == 1)
        return std::log(a(0, 0).real());
    const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(a.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
    return ev.array().log().sum();
}

HermMat psd_floor(const HermMat &a)
{
    const HermEigen e = eig(a);
    if (e.values(0) >= 0.0)
        return a;
    const RVec v = e.values.cwiseMax(0.0);
    return HermMat(e.vectors * v.asDiagonal() * e.vectors.adjoint());
}

double kl_gauss(const HermMat &s0, const HermMat &s1)
{
    require_same_dim(s0, s1, "kl_gauss");
    require_pd(s0, "kl_gauss(S0)");
    require_pd(s1, "kl_gauss(S1)");
    const HermMat inv1 = herm_inverse(s1);
    const double tr = (inv1.matrix() * s0.matrix()).trace().real();
    const double n = static_cast<double>(s0.dim());
    // ln det(S1^{-1} S0) = ln det S0 - ln det S1
    const double nats = tr - n - (logdet(s0) - logdet(s1));
    return nats / std::numbers::ln2;
}

double f_penalty(const HermMat &a, const HermMat &at, double n0, double nt0)
{
    require_same_dim(a, at, "f_penalty");
    if (!(n0 > 0.0) || !(nt0 > 0.0))
        throw NotPositiveDefinite("f_penalty: noise levels must be positive");
    const auto n = a.dim();
    const HermMat n0i = HermMat::identity(n, n0);
    const HermMat nt0i = HermMat::identity(n, nt0);
    const HermMat sandwich(at.matrix() * herm_inverse(a).matrix() * at.matrix());
    return kl_gauss(n0i, at) + kl_gauss(a, at) + kl_gauss(nt0i, at) - kl_gauss(nt0i, sandwich);
}

} // namespace rscdma

#pragma once

#include <complex>

#include <Eigen/Dense>

#include "rscdma/errors.hpp"

namespace rscdma
{

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Relative eigenvalue floor (times trace/N) below which a matrix is
/// treated as singular.
inline constexpr double kEpsPd = 1e-12;

/// Dense complex Hermitian matrix. The constructor symmetrizes its input so
/// that entries(i,j) == conj(entries(j,i)) holds bit-exactly afterwards.
class HermMat
{
public:
    HermMat() = default;
    explicit HermMat(const CMat &m);

    static HermMat identity(Eigen::Index n, double scale = 1.0);
    static HermMat zero(Eigen::Index n);

    Eigen::Index dim() const { return m_.rows(); }
    const CMat &matrix() const { return m_; }
    cd operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double trace() const { return m_.diagonal().real().sum(); }
    double frobenius() const { return m_.norm(); }

    HermMat operator+(const HermMat &o) const;
    HermMat operator-(const HermMat &o) const;
    HermMat operator*(double s) const;

private:
    CMat m_;
};

struct HermEigen
{
    RVec values; // ascending
    CMat vectors;
};

HermEigen eig(const HermMat &a);

/// Smallest eigenvalue.
double min_eig(const HermMat &a);

/// Spectral norm (largest absolute eigenvalue).
double spectral_norm(const HermMat &a);

bool is_positive_definite(const HermMat &a);

/// Throws NotPositiveDefinite unless min eigenvalue > kEpsPd * trace / N.
void require_pd(const HermMat &a, const char *what);

/// Principal square root S (Hermitian PSD) with S * S^H == A.
HermMat herm_sqrt(const HermMat &a);

/// Square root of a PSD matrix with negative eigenvalues clamped to zero.
/// Used for covariance factors that may be rank deficient.
CMat psd_sqrt(const HermMat &a);

HermMat herm_inverse(const HermMat &a);

/// Natural-log determinant of a PD matrix.
double logdet(const HermMat &a);

/// Clamp negative eigenvalues to zero (PSD projection).
HermMat psd_floor(const HermMat &a);

/// KL( CN(0,s0) || CN(0,s1) ) in bits.
double kl_gauss(const HermMat &s0, const HermMat &s1);

/// Free-energy penalty of the (A, At) pair, in bits:
/// KL(n0 I || At) + KL(A || At) + KL(nt0 I || At) - KL(nt0 I || At A^{-1} At).
double f_penalty(const HermMat &a, const HermMat &at, double n0, double nt0);

} // namespace rscdma

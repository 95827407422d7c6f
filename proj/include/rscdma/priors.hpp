#pragma once

#include <optional>
#include <vector>

#include "rscdma/hermlin.hpp"
#include "rscdma/random.hpp"

namespace rscdma
{

/// Real-valued one-dimensional law: either N(0, variance) or a finite set of
/// points with probabilities. One quadrature component of a separable prior.
struct RealLaw
{
    bool gaussian = false;
    double variance = 0.0;
    std::vector<double> points;
    std::vector<double> probs;
};

/// Per-antenna symbol law.
class Prior
{
public:
    enum class Kind
    {
        Gaussian,
        Discrete
    };

    static Prior gaussian(double power);
    static Prior discrete(std::vector<cd> points, std::vector<double> probs);

    Kind kind() const { return kind_; }
    bool is_gaussian() const { return kind_ == Kind::Gaussian; }
    bool is_discrete() const { return kind_ == Kind::Discrete; }

    const std::vector<cd> &points() const { return points_; }
    const std::vector<double> &probs() const { return probs_; }
    std::size_t size() const { return points_.size(); }

    /// E[|x|^2]
    double power() const;
    /// E[x]
    cd mean() const;
    /// E[x^2] (pseudo-variance around zero)
    cd pseudo_moment() const;

    /// Dimension of the real affine hull of the support: 0 (point mass),
    /// 1 (collinear points), 2 (spans the plane). Gaussian laws return 2.
    int affine_rank() const;

    /// Unit direction of the support line when affine_rank() == 1.
    cd line_direction() const;

    /// If x = a + j b with a, b independent, returns the laws of (a, b).
    std::optional<std::pair<RealLaw, RealLaw>> iq_split() const;

    bool operator==(const Prior &o) const;

private:
    // Nominal power for named constellations, where summing the rounded points would be off by an ulp.
    friend Prior qpsk(double power);
    friend Prior bpsk(double power);

    Kind kind_ = Kind::Gaussian;
    double power_ = 1.0;
    std::vector<cd> points_;
    std::vector<double> probs_;
};

/// Equal-probability square QPSK with E|x|^2 = power: points (+-1 +- j) sqrt(power/2).
Prior qpsk(double power);

/// Equal-probability BPSK on the real axis with E|x|^2 = power.
Prior bpsk(double power);

/// E[|x|^2]
double power(const Prior &p);

/// `n` i.i.d. draws.
std::vector<cd> sample(const Prior &p, Rng &rng, std::size_t n);

/// One draw.
cd sample_one(const Prior &p, Rng &rng);

/// Independent per-antenna priors for one user.
class VectorPrior
{
public:
    VectorPrior() = default;
    /// Correlated vector priors are not supported; `independent == false` throws InvalidPrior.
    explicit VectorPrior(std::vector<Prior> per_antenna, bool independent = true);

    static VectorPrior replicate(const Prior &p, int antennas);

    int size() const { return static_cast<int>(per_antenna_.size()); }
    const Prior &operator[](int m) const { return per_antenna_[static_cast<std::size_t>(m)]; }
    const std::vector<Prior> &per_antenna() const { return per_antenna_; }

    bool all_gaussian() const;
    bool all_discrete() const;

    /// Diagonal of E[x x^H] plus off-diagonal mean products.
    CMat second_moment() const;

    /// Product of constellation sizes; throws EnumerationTooLarge above `cap`.
    std::size_t product_size(std::size_t cap) const;

    bool operator==(const VectorPrior &o) const { return per_antenna_ == o.per_antenna_; }

private:
    std::vector<Prior> per_antenna_;
};

} // namespace rscdma

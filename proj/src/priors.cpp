#include "rscdma/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rscdma
{

namespace
{

constexpr double kProbTol = 1e-12;

// Distinct values (within a relative tolerance) in first-appearance order.
std::vector<double> distinct(const std::vector<double> &v, double scale)
{
    std::vector<double> out;
    for (double x : v)
    {
        const bool seen = std::any_of(out.begin(), out.end(), [&](double y) { return std::abs(x - y) <= 1e-12 * scale; });
        if (!seen)
            out.push_back(x);
    }
    return out;
}

} // namespace

Prior Prior::gaussian(double power)
{
    if (!(power > 0.0) || !std::isfinite(power))
        throw InvalidPower("Gaussian prior requires power > 0, got " + std::to_string(power));
    Prior p;
    p.kind_ = Kind::Gaussian;
    p.power_ = power;
    return p;
}

Prior Prior::discrete(std::vector<cd> points, std::vector<double> probs)
{
    if (points.empty())
        throw InvalidPrior("discrete prior needs at least one point");
    if (points.size() != probs.size())
        throw InvalidPrior("discrete prior: points and probabilities differ in length");
    double sum = 0.0;
    for (double q : probs)
    {
        if (!(q >= 0.0) || !std::isfinite(q))
            throw InvalidPrior("discrete prior: probabilities must be nonnegative");
        sum += q;
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw InvalidPrior("discrete prior: probabilities sum to " + std::to_string(sum) + ", expected 1");
    for (const cd &x : points)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw InvalidPrior("discrete prior: non-finite point");
    Prior p;
    p.kind_ = Kind::Discrete;
    p.points_ = std::move(points);
    p.probs_ = std::move(probs);
    p.power_ = 0.0;
    for (std::size_t i = 0; i < p.points_.size(); ++i)
        p.power_ += p.probs_[i] * std::norm(p.points_[i]);
    return p;
}

double Prior::power() const
{
    return power_;
}

cd Prior::mean() const
{
    cd m = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
        m += probs_[i] * points_[i];
    return m;
}

cd Prior::pseudo_moment() const
{
    cd m = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
        m += probs_[i] * points_[i] * points_[i];
    return m;
}

int Prior::affine_rank() const
{
    if (is_gaussian())
        return 2;
    std::vector<cd> supp;
    for (std::size_t i = 0; i < points_.size(); ++i)
        if (probs_[i] > 0.0)
            supp.push_back(points_[i]);
    double scale = 0.0;
    for (const cd &x : supp)
        scale = std::max(scale, std::abs(x - supp.front()));
    if (scale <= 1e-14)
        return 0;
    const cd d = line_direction();
    for (const cd &x : supp)
    {
        const cd r = x - supp.front();
        // Component orthogonal to the line through the first two distinct points.
        if (std::abs((std::conj(d) * r).imag()) > 1e-10 * scale)
            return 2;
    }
    return 1;
}

cd Prior::line_direction() const
{
    if (is_gaussian())
        return 1.0;
    const cd *first = nullptr;
    for (std::size_t i = 0; i < points_.size(); ++i)
    {
        if (probs_[i] <= 0.0)
            continue;
        if (!first)
        {
            first = &points_[i];
            continue;
        }
        const cd d = points_[i] - *first;
        if (std::abs(d) > 1e-14)
            return d / std::abs(d);
    }
    return 1.0;
}

std::optional<std::pair<RealLaw, RealLaw>> Prior::iq_split() const
{
    if (is_gaussian())
    {
        RealLaw r{true, 0.5 * power_, {}, {}};
        return std::make_pair(r, r);
    }
    double scale = 0.0;
    for (const cd &x : points_)
        scale = std::max(scale, std::abs(x));
    scale = std::max(scale, 1e-300);
    std::vector<double> re(points_.size()), im(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i)
    {
        re[i] = points_[i].real();
        im[i] = points_[i].imag();
    }
    const auto ure = distinct(re, scale);
    const auto uim = distinct(im, scale);
    auto index_of = [&](const std::vector<double> &u, double v) {
        for (std::size_t k = 0; k < u.size(); ++k)
            if (std::abs(u[k] - v) <= 1e-12 * scale)
                return k;
        return u.size();
    };
    std::vector<double> pre(ure.size(), 0.0), pim(uim.size(), 0.0);
    std::vector<double> joint(ure.size() * uim.size(), 0.0);
    for (std::size_t i = 0; i < points_.size(); ++i)
    {
        const auto a = index_of(ure, re[i]);
        const auto b = index_of(uim, im[i]);
        pre[a] += probs_[i];
        pim[b] += probs_[i];
        joint[a * uim.size() + b] += probs_[i];
    }
    for (std::size_t a = 0; a < ure.size(); ++a)
        for (std::size_t b = 0; b < uim.size(); ++b)
            if (std::abs(joint[a * uim.size() + b] - pre[a] * pim[b]) > 1e-12)
                return std::nullopt;
    return std::make_pair(RealLaw{false, 0.0, ure, pre}, RealLaw{false, 0.0, uim, pim});
}

bool Prior::operator==(const Prior &o) const
{
    if (kind_ != o.kind_)
        return false;
    if (is_gaussian())
        return power_ == o.power_;
    return points_ == o.points_ && probs_ == o.probs_;
}

Prior qpsk(double power)
{
    if (!(power > 0.0))
        throw InvalidPower("qpsk requires power > 0, got " + std::to_string(power));
    const double a = std::sqrt(0.5 * power);
    Prior p = Prior::discrete({{a, a}, {a, -a}, {-a, a}, {-a, -a}}, {0.25, 0.25, 0.25, 0.25});
    p.power_ = power;
    return p;
}

Prior bpsk(double power)
{
    if (!(power > 0.0))
        throw InvalidPower("bpsk requires power > 0, got " + std::to_string(power));
    const double a = std::sqrt(power);
    Prior p = Prior::discrete({{a, 0.0}, {-a, 0.0}}, {0.5, 0.5});
    p.power_ = power;
    return p;
}

double power(const Prior &p)
{
    return p.power();
}

cd sample_one(const Prior &p, Rng &rng)
{
    if (p.is_gaussian())
        return rng.complex_normal(p.power());
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
        acc += p.probs()[i];
        if (u < acc)
            return p.points()[i];
    }
    return p.points().back();
}

std::vector<cd> sample(const Prior &p, Rng &rng, std::size_t n)
{
    std::vector<cd> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sample_one(p, rng));
    return out;
}

VectorPrior::VectorPrior(std::vector<Prior> per_antenna, bool independent) : per_antenna_(std::move(per_antenna))
{
    if (!independent)
        throw InvalidPrior("correlated vector priors are not supported");
    if (per_antenna_.empty())
        throw InvalidPrior("vector prior needs at least one antenna");
}

VectorPrior VectorPrior::replicate(const Prior &p, int antennas)
{
    if (antennas < 1)
        throw InvalidPrior("vector prior needs at least one antenna");
    return VectorPrior(std::vector<Prior>(static_cast<std::size_t>(antennas), p));
}

bool VectorPrior::all_gaussian() const
{
    return std::all_of(per_antenna_.begin(), per_antenna_.end(), [](const Prior &p) { return p.is_gaussian(); });
}

bool VectorPrior::all_discrete() const
{
    return std::all_of(per_antenna_.begin(), per_antenna_.end(), [](const Prior &p) { return p.is_discrete(); });
}

CMat VectorPrior::second_moment() const
{
    const int m = size();
    CMat s(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            s(i, j) = i == j ? cd(per_antenna_[i].power(), 0.0) : per_antenna_[i].mean() * std::conj(per_antenna_[j].mean());
    return s;
}

std::size_t VectorPrior::product_size(std::size_t cap) const
{
    std::size_t n = 1;
    for (const Prior &p : per_antenna_)
    {
        if (!p.is_discrete())
            throw InvalidPrior("product_size: all antennas must be discrete");
        n *= p.size();
        if (n > cap)
            throw EnumerationTooLarge("product constellation exceeds enumeration cap of " + std::to_string(cap));
    }
    return n;
}

} // namespace rscdma

#include "rscdma/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rscdma/random.hpp"

namespace rscdma
{

namespace
{

using json = nlohmann::json;

int line_of(const std::string &text, std::size_t pos)
{
    int line = 1;
    for (std::size_t i = 0; i < pos && i < text.size(); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

// Object reader that remembers which keys were consumed so leftovers can be
// rejected, and that names the full key path in every error.
class Node
{
public:
    Node(const json &j, std::string path, const std::string &text) : j_(j), path_(std::move(path)), text_(text)
    {
        if (!j_.is_object())
            fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    [[noreturn]] void fail(const std::string &key_path, const std::string &what) const
    {
        // Best-effort line: first occurrence of the last path component.
        std::string leaf = key_path.substr(key_path.rfind('.') + 1);
        std::string where;
        const auto pos = text_.find("\"" + leaf + "\"");
        if (pos != std::string::npos)
            where = " (line " + std::to_string(line_of(text_, pos)) + ")";
        throw ConfigError("config key '" + key_path + "'" + where + ": " + what);
    }

    std::string key(const std::string &k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string &k) const { return j_.contains(k); }

    const json &get(const std::string &k)
    {
        if (!j_.contains(k))
            fail(key(k), "required key is missing");
        used_.insert(k);
        return j_.at(k);
    }

    double num(const std::string &k)
    {
        const json &v = get(k);
        if (!v.is_number())
            fail(key(k), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d))
            fail(key(k), "must be finite");
        return d;
    }
    double num(const std::string &k, double def) { return has(k) ? num(k) : def; }

    long long integer(const std::string &k)
    {
        const json &v = get(k);
        if (!v.is_number_integer())
            fail(key(k), "expected an integer");
        return v.get<long long>();
    }
    long long integer(const std::string &k, long long def) { return has(k) ? integer(k) : def; }

    std::size_t count(const std::string &k, std::size_t def, long long min = 0)
    {
        if (!has(k))
            return def;
        const long long v = integer(k);
        if (v < min)
            fail(key(k), "must be >= " + std::to_string(min));
        return static_cast<std::size_t>(v);
    }

    bool flag(const std::string &k, bool def)
    {
        if (!has(k))
            return def;
        const json &v = get(k);
        if (!v.is_boolean())
            fail(key(k), "expected true or false");
        return v.get<bool>();
    }

    std::string str(const std::string &k)
    {
        const json &v = get(k);
        if (!v.is_string())
            fail(key(k), "expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string &k, const std::string &def) { return has(k) ? str(k) : def; }

    template <class E>
    E choice(const std::string &k, const std::vector<std::pair<std::string, E>> &opts, E def)
    {
        if (!has(k))
            return def;
        const std::string s = str(k);
        std::string names;
        for (const auto &[name, val] : opts)
        {
            if (name == s)
                return val;
            names += (names.empty() ? "" : ", ") + name;
        }
        fail(key(k), "unknown value '" + s + "' (expected one of: " + names + ")");
    }

    Node child(const std::string &k) { return Node(get(k), key(k), text_); }

    /// Rejects keys that were never read.
    void finish() const
    {
        for (const auto &[k, v] : j_.items())
            if (!used_.count(k))
                fail(key(k), "unknown key");
    }

private:
    const json &j_;
    std::string path_;
    const std::string &text_;
    std::set<std::string> used_;
};

double positive(Node &n, const std::string &k)
{
    const double v = n.num(k);
    if (!(v > 0.0))
        n.fail(n.key(k), "must be > 0");
    return v;
}

Prior parse_prior(Node n)
{
    const std::string kind = n.str("kind");
    Prior p;
    try
    {
        if (kind == "gaussian")
            p = Prior::gaussian(n.num("power"));
        else if (kind == "qpsk")
            p = qpsk(n.num("power"));
        else if (kind == "bpsk")
            p = bpsk(n.num("power"));
        else if (kind == "discrete")
        {
            const json &pts = n.get("points");
            const json &prs = n.get("probs");
            if (!pts.is_array() || !prs.is_array())
                n.fail(n.key("points"), "points and probs must be arrays");
            std::vector<cd> points;
            std::vector<double> probs;
            for (const json &q : pts)
            {
                if (!q.is_array() || q.size() != 2 || !q[0].is_number() || !q[1].is_number())
                    n.fail(n.key("points"), "each point must be [re, im]");
                points.emplace_back(q[0].get<double>(), q[1].get<double>());
            }
            for (const json &q : prs)
            {
                if (!q.is_number())
                    n.fail(n.key("probs"), "probabilities must be numbers");
                probs.push_back(q.get<double>());
            }
            p = Prior::discrete(points, probs);
        }
        else
            n.fail(n.key("kind"), "unknown prior kind '" + kind + "' (gaussian, qpsk, bpsk, discrete)");
    }
    catch (const InvalidPower &e)
    {
        n.fail(n.key("power"), e.what());
    }
    catch (const InvalidPrior &e)
    {
        n.fail(n.key("probs"), e.what());
    }
    n.finish();
    return p;
}

CMat parse_matrix(const json &j, int rows, const std::string &path)
{
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw ConfigError("config key '" + path + "': expected " + std::to_string(rows) + " rows");
    const auto cols = j.front().is_array() ? j.front().size() : 0;
    CMat h(rows, static_cast<Eigen::Index>(cols));
    for (int r = 0; r < rows; ++r)
    {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError("config key '" + path + "': ragged matrix");
        for (std::size_t c = 0; c < cols; ++c)
        {
            const json &e = j[r][c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigError("config key '" + path + "': entries must be [re, im]");
            h(r, static_cast<Eigen::Index>(c)) = cd(e[0].get<double>(), e[1].get<double>());
        }
    }
    return h;
}

// N0 from either "<prefix>snr_db" (P / N0 in dB) or an explicit noise key.
std::optional<double> noise_level(Node &n, const std::string &snr_key, const std::string &noise_key, double power)
{
    const bool has_snr = n.has(snr_key), has_noise = n.has(noise_key);
    if (has_snr && has_noise)
        n.fail(n.key(noise_key), "give either " + snr_key + " or " + noise_key + ", not both");
    if (has_snr)
        return power / std::pow(10.0, n.num(snr_key) / 10.0);
    if (has_noise)
        return positive(n, noise_key);
    return std::nullopt;
}

std::vector<double> parse_grid(Node &n, const std::string &k)
{
    const json &g = n.get(k);
    std::vector<double> out;
    if (g.is_array())
    {
        for (const json &v : g)
        {
            if (!v.is_number())
                n.fail(n.key(k), "grid entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    Node r = n.child(k);
    const double start = r.num("start"), stop = r.num("stop"), step = r.num("step");
    r.finish();
    if (!(step > 0.0))
        n.fail(n.key(k) + ".step", "must be > 0");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    for (long long i = 0; i <= count; ++i)
        out.push_back(start + static_cast<double>(i) * step);
    return out;
}

} // namespace

std::uint64_t fnv1a(const std::string &s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    static const char *digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

SimParams RunConfig::sim_params() const
{
    if (!simulation)
        throw ConfigError("config key 'simulation': block is required for this command");
    const Group &g = scenario.groups.front();
    SimParams p;
    p.K = simulation->K;
    p.L = simulation->L;
    p.N = scenario.n_rx;
    p.M = g.antennas;
    p.scheme = scenario.scheme;
    p.true_prior = g.true_prior;
    p.post_prior = g.post_prior;
    p.n0 = scenario.n0;
    p.nt0 = scenario.nt0;
    p.chips = simulation->chips;
    p.fresh_ensemble = simulation->fresh_ensemble;
    p.seed = sub_seed(seed, 3);
    return p;
}

RunConfig parse_config(const std::string &text, std::optional<std::uint64_t> seed_override)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError("config syntax error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    Node root(doc, "", text);
    RunConfig cfg;
    cfg.version = static_cast<int>(root.integer("version"));
    if (cfg.version != kConfigVersion)
        root.fail("version", "unsupported version " + std::to_string(cfg.version) + " (expected " +
                                 std::to_string(kConfigVersion) + ")");
    const long long seed = root.integer("seed", 1);
    if (seed < 0)
        root.fail("seed", "must be >= 0");
    cfg.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(seed);

    // sweep first: it decides whether scenario.beta is required
    if (root.has("sweep"))
    {
        Node s = root.child("sweep");
        SweepBlock b;
        b.betas = parse_grid(s, "beta");
        for (std::size_t i = 0; i < b.betas.size(); ++i)
            if (!(b.betas[i] >= 0.0) || (i > 0 && !(b.betas[i] > b.betas[i - 1])))
                s.fail(s.key("beta"), "grid must be nonnegative and strictly increasing");
        b.refine_levels = static_cast<int>(s.count("refine_levels", 0));
        b.refine_points = static_cast<int>(s.count("refine_points", 9, 1));
        s.finish();
        cfg.sweep = b;
    }

    {
        Node s = root.child("scenario");
        Scenario &scn = cfg.scenario;
        scn.scheme = s.choice<Scheme>("scheme", {{"STS", Scheme::STS}, {"TS", Scheme::TS}}, Scheme::STS);
        if (s.has("beta") || !cfg.sweep)
        {
            scn.beta = s.num("beta");
            if (!(scn.beta >= 0.0))
                s.fail(s.key("beta"), "must be >= 0");
        }
        else
            scn.beta = cfg.sweep->betas.empty() ? 1.0 : cfg.sweep->betas.front();
        const long long n = s.integer("n_rx");
        const long long m = s.integer("antennas", 1);
        if (n < 1)
            s.fail(s.key("n_rx"), "must be >= 1");
        if (m < 1)
            s.fail(s.key("antennas"), "must be >= 1");
        scn.n_rx = static_cast<int>(n);
        const Prior tp = parse_prior(s.child("true_prior"));
        const Prior pp = s.has("post_prior") ? parse_prior(s.child("post_prior")) : tp;
        const auto n0 = noise_level(s, "snr_db", "n0", tp.power());
        if (!n0)
            s.fail(s.key("snr_db"), "one of snr_db or n0 is required");
        scn.n0 = *n0;
        scn.nt0 = noise_level(s, "postulated_snr_db", "nt0", pp.power()).value_or(scn.n0);
        scn.groups = {{scn.beta, static_cast<int>(m), VectorPrior::replicate(tp, static_cast<int>(m)),
                       VectorPrior::replicate(pp, static_cast<int>(m))}};
        if (s.has("channel"))
        {
            Node c = s.child("channel");
            scn.channel_law.kind = c.choice<ChannelLaw::Kind>(
                "law", {{"iid_gaussian", ChannelLaw::Kind::IidGaussian}, {"fixed", ChannelLaw::Kind::FixedRealizations}},
                ChannelLaw::Kind::IidGaussian);
            scn.channel_law.sampler = c.choice<ChannelLaw::Sampler>(
                "sampler", {{"mc", ChannelLaw::Sampler::MonteCarlo}, {"qmc", ChannelLaw::Sampler::QuasiMonteCarlo}},
                ChannelLaw::Sampler::MonteCarlo);
            scn.channel_samples = c.count("samples", scn.channel_samples, 1);
            if (scn.channel_law.kind == ChannelLaw::Kind::FixedRealizations)
            {
                const json &list = c.get("realizations");
                if (!list.is_array() || list.empty())
                    c.fail(c.key("realizations"), "expected a nonempty list of matrices");
                for (std::size_t i = 0; i < list.size(); ++i)
                    scn.channel_law.realizations.push_back(
                        parse_matrix(list[i], scn.n_rx, c.key("realizations") + "[" + std::to_string(i) + "]"));
            }
            c.finish();
        }
        scn.channel_seed = sub_seed(cfg.seed, 1);
        s.finish();
        try
        {
            scn.validate();
        }
        catch (const Error &e)
        {
            throw ConfigError(std::string("config block 'scenario': ") + e.what());
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(std::string("config block 'scenario': ") + e.what());
        }
    }

    if (root.has("solver"))
    {
        Node s = root.child("solver");
        SolverConfig &sc = cfg.solver;
        sc.damping = s.num("damping", sc.damping);
        if (!(sc.damping > 0.0 && sc.damping <= 1.0))
            s.fail(s.key("damping"), "must lie in (0, 1]");
        sc.tol = s.has("tol") ? positive(s, "tol") : sc.tol;
        sc.max_iter = s.count("max_iter", sc.max_iter, 1);
        sc.adaptive = s.flag("adaptive", sc.adaptive);
        sc.anderson_depth = static_cast<int>(s.count("anderson_depth", 0));
        sc.consistency_tol = s.num("consistency_tol", sc.consistency_tol);
        cfg.init = s.choice<InitPolicy>("init",
                                        {{"both", InitPolicy::Both},
                                         {"noise_only", InitPolicy::NoiseOnly},
                                         {"full_interference", InitPolicy::FullInterference}},
                                        InitPolicy::Both);
        if (s.has("integrator"))
        {
            Node i = s.child("integrator");
            Integrator &in = sc.integrator;
            in.method = i.choice<Integrator::Method>("method",
                                                     {{"gauss_hermite", Integrator::Method::GaussHermite},
                                                      {"monte_carlo", Integrator::Method::MonteCarlo},
                                                      {"quasi_monte_carlo", Integrator::Method::QuasiMonteCarlo}},
                                                     Integrator::Method::GaussHermite);
            in.order = static_cast<int>(i.count("order", static_cast<std::size_t>(in.order), 2));
            in.samples = i.count("samples", in.samples, 1);
            in.target_rel_err = i.num("target_rel_err", 0.0);
            i.finish();
        }
        if (s.has("mi_estimator"))
        {
            Node e = s.child("mi_estimator");
            cfg.mi.method = e.choice<MiEstimator::Method>(
                "method", {{"auto", MiEstimator::Method::Auto}, {"histogram", MiEstimator::Method::Histogram}},
                MiEstimator::Method::Auto);
            cfg.mi.bins = static_cast<int>(e.count("bins", static_cast<std::size_t>(cfg.mi.bins), 2));
            cfg.mi.samples = e.count("samples", cfg.mi.samples, 2);
            cfg.mi.drift_threshold = e.num("drift_threshold", cfg.mi.drift_threshold);
            e.finish();
        }
        s.finish();
    }
    cfg.solver.integrator.seed = sub_seed(cfg.seed, 2);
    cfg.mi.seed = sub_seed(cfg.seed, 4);

    if (root.has("simulation"))
    {
        Node s = root.child("simulation");
        SimulationBlock b;
        b.K = static_cast<int>(s.count("K", 0, 1));
        b.L = static_cast<int>(s.count("L", 0, 1));
        if (!s.has("K") || !s.has("L"))
            s.fail(s.key(s.has("K") ? "L" : "K"), "required key is missing");
        b.trials = s.count("trials", b.trials, 1);
        b.detector = s.choice<Detector>("detector", {{"lmmse", Detector::LMMSE}, {"exact_gpme", Detector::ExactGPME}},
                                        Detector::LMMSE);
        b.chips = s.choice<ChipLaw>("chips", {{"qpsk", ChipLaw::Qpsk}, {"gaussian", ChipLaw::Gaussian}},
                                    ChipLaw::Qpsk);
        b.fresh_ensemble = s.flag("fresh_ensemble", true);
        b.pool_users = s.flag("pool_users", false);
        b.write_trials = s.flag("write_trials", false);
        s.finish();
        cfg.simulation = b;
    }

    if (root.has("validation"))
    {
        Node s = root.child("validation");
        ValidationBlock b;
        b.z_threshold = s.has("z_threshold") ? positive(s, "z_threshold") : b.z_threshold;
        b.rel_tol = s.has("rel_tol") ? positive(s, "rel_tol") : b.rel_tol;
        b.corollary = s.flag("corollary", b.corollary);
        b.eig_samples = s.count("eig_samples", b.eig_samples, 2);
        if (s.has("prediction"))
        {
            Node p = s.child("prediction");
            const Group &g = cfg.scenario.groups.front();
            b.prediction_n0 = noise_level(p, "snr_db", "n0", g.true_prior[0].power());
            b.prediction_nt0 = noise_level(p, "postulated_snr_db", "nt0", g.post_prior[0].power());
            p.finish();
        }
        s.finish();
        cfg.validation = b;
    }

    if (root.has("output"))
    {
        Node s = root.child("output");
        cfg.output.directory = s.str("directory", cfg.output.directory);
        cfg.output.format = s.str("format", cfg.output.format);
        if (cfg.output.format != "csv" && cfg.output.format != "json")
            s.fail(s.key("format"), "expected csv or json");
        s.finish();
    }
    root.finish();

    cfg.hash = fnv1a(doc.dump() + "|seed=" + std::to_string(cfg.seed));
    return cfg;
}

RunConfig load_config(const std::string &path, std::optional<std::uint64_t> seed_override)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), seed_override);
}

} // namespace rscdma

#include "rscdma/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "rscdma/rmt_gaussian.hpp"
#include "rscdma/table.hpp"

namespace rscdma
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string out_path(const RunConfig &cfg, const OutputTarget &out, const std::string &stem, bool data = true)
{
    const std::string dir = out.directory.empty() ? cfg.output.directory : out.directory;
    std::filesystem::create_directories(dir);
    const std::string fmt = out.format.empty() ? cfg.output.format : out.format;
    return (std::filesystem::path(dir) / (stem + (data ? "." + fmt : ""))).string();
}

std::string format_of(const RunConfig &cfg, const OutputTarget &out)
{
    return out.format.empty() ? cfg.output.format : out.format;
}

std::string integrator_text(const Integrator &i)
{
    switch (i.method)
    {
    case Integrator::Method::GaussHermite:
        return "gauss_hermite:" + std::to_string(i.order);
    case Integrator::Method::MonteCarlo:
        return "monte_carlo:" + std::to_string(i.samples);
    default:
        return "quasi_monte_carlo:" + std::to_string(i.samples);
    }
}

std::string mi_text(const MiEstimator &e)
{
    return std::string(e.method == MiEstimator::Method::Auto ? "auto" : "histogram") + ":bins=" +
           std::to_string(e.bins) + ";samples=" + std::to_string(e.samples);
}

// Row-major "[a+bi c+di; ...]" with negative zero printed as 0.
std::string matrix_text(const HermMat &m)
{
    auto part = [](double v) { return format_double(v == 0.0 ? 0.0 : v); };
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.dim(); ++i)
        for (Eigen::Index j = 0; j < m.dim(); ++j)
        {
            if (j > 0)
                s += " ";
            else if (i > 0)
                s += "; ";
            const double im = m(i, j).imag() == 0.0 ? 0.0 : m(i, j).imag();
            s += part(m(i, j).real()) + (std::signbit(im) ? "-" : "+") + part(std::abs(im)) + "i";
        }
    return s + "]";
}

// Provenance columns carried by every output row.
std::vector<std::string> provenance_columns()
{
    return {"config_hash", "solver_tol", "integrator", "integrator_target_rel_err", "mi_estimator",
            "mi_drift_threshold"};
}

std::vector<Cell> provenance(const RunConfig &cfg)
{
    return {hex64(cfg.hash), cfg.solver.tol, integrator_text(cfg.solver.integrator),
            cfg.solver.integrator.target_rel_err, mi_text(cfg.mi), cfg.mi.drift_threshold};
}

Table make_table(std::vector<std::string> cols)
{
    Table t;
    t.columns = provenance_columns();
    t.columns.insert(t.columns.end(), cols.begin(), cols.end());
    return t;
}

void add_row(Table &t, const RunConfig &cfg, std::vector<Cell> cells)
{
    std::vector<Cell> row = provenance(cfg);
    row.insert(row.end(), cells.begin(), cells.end());
    t.add(std::move(row));
}

struct SolutionSet
{
    std::vector<FixedPoint> sols;
    std::size_t selected = 0;
    bool tie = false;
};

SolutionSet solve_all(const Scenario &scn, const RunConfig &cfg, const ChannelPool &pool)
{
    SolutionSet set;
    std::vector<SolverConfig::Init> inits;
    if (cfg.init != InitPolicy::FullInterference)
        inits.push_back(SolverConfig::Init::NoiseOnly);
    if (cfg.init != InitPolicy::NoiseOnly)
        inits.push_back(SolverConfig::Init::FullInterference);
    const SweepOptions defaults;
    for (auto init : inits)
    {
        SolverConfig sc = cfg.solver;
        sc.init = init;
        FixedPoint fp = solve(scn, sc, pool);
        const bool dup = std::any_of(set.sols.begin(), set.sols.end(), [&](const FixedPoint &s) {
            return (s.A - fp.A).frobenius() <= defaults.dedup_tol * s.A.frobenius() &&
                   (s.At - fp.At).frobenius() <= defaults.dedup_tol * s.At.frobenius();
        });
        if (!dup)
            set.sols.push_back(std::move(fp));
    }
    set.selected = select_branch(set.sols, defaults.tie_tol, &set.tie);
    return set;
}

double safe_c_joint(const Scenario &scn, const FixedPoint &fp, const RunConfig &cfg, const ChannelPool &pool)
{
    return scn.matched() ? c_joint(scn, fp, cfg.solver.integrator, pool) : kNaN;
}

const char *plot_stub = R"py(#!/usr/bin/env python3
"""Plot per-antenna spectral efficiency versus load from sweep.csv."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
rows = list(csv.DictReader(open(path)))
for col, style in (("c_joint_per_antenna", "-"), ("c_sep_per_antenna", "--")):
    sel = [r for r in rows if r["selected"] == "true" and r[col] not in ("nan", "")]
    plt.plot([float(r["beta"]) for r in sel], [float(r[col]) for r in sel], style, label=col)
    alt = [r for r in rows if r["selected"] == "false" and r[col] not in ("nan", "")]
    if alt:
        plt.plot([float(r["beta"]) for r in alt], [float(r[col]) for r in alt], "x", label=col + " (other branch)")
plt.xlabel("beta")
plt.ylabel("bits/s/Hz per transmit antenna")
plt.legend()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
)py";

} // namespace

int cmd_solve(const RunConfig &cfg, const OutputTarget &out, std::ostream &log)
{
    const Scenario &scn = cfg.scenario;
    const ChannelPool pool = ChannelPool::draw(scn);
    const SolutionSet set = solve_all(scn, cfg, pool);
    const double m = mean_antennas(scn);
    Table t = make_table({"command", "scheme", "beta", "n_rx", "antennas", "branch", "selected", "converged",
                          "iterations", "residual", "matched_gap", "free_energy", "c_joint", "c_sep",
                          "c_joint_per_antenna", "c_sep_per_antenna", "A", "At"});
    for (std::size_t i = 0; i < set.sols.size(); ++i)
    {
        const FixedPoint &fp = set.sols[i];
        const double cj = fp.converged ? safe_c_joint(scn, fp, cfg, pool) : kNaN;
        const double cs = fp.converged ? c_sep(scn, fp, cfg.solver.integrator, pool, cfg.mi) : kNaN;
        add_row(t, cfg,
                {std::string("solve"), std::string(to_string(scn.scheme)), scn.beta, static_cast<long long>(scn.n_rx),
                 static_cast<long long>(scn.groups.front().antennas), std::string(to_string(fp.branch)),
                 i == set.selected, fp.converged, static_cast<long long>(fp.iterations), fp.residual, fp.matched_gap,
                 fp.free_energy, cj, cs, cj / m, cs / m, matrix_text(fp.A), matrix_text(fp.At)});
        log << (i == set.selected ? "* " : "  ") << to_string(fp.branch) << ": converged=" << fp.converged
            << " iterations=" << fp.iterations << " free_energy=" << format_double(fp.free_energy)
            << " c_joint=" << format_double(cj) << " c_sep=" << format_double(cs) << "\n";
    }
    if (set.tie)
        log << "warning: free energies tie; selected the larger-interference branch\n";
    write_table(t, out_path(cfg, out, "solve"), format_of(cfg, out));
    const FixedPoint &sel = set.sols[set.selected];
    if (!sel.converged)
    {
        log << "error: no convergence (residual " << format_double(sel.residual) << ")\n";
        return kExitConvergence;
    }
    if (!sel.consistent)
    {
        log << "error: matched fixed point has A != At (gap " << format_double(sel.matched_gap) << ")\n";
        return kExitConvergence;
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig &cfg, const OutputTarget &out, std::ostream &log)
{
    if (!cfg.sweep)
        throw ConfigError("config key 'sweep': block is required for the sweep command");
    const Scenario &base = cfg.scenario;
    SweepOptions opt;
    opt.refine_levels = cfg.sweep->refine_levels;
    opt.refine_points = cfg.sweep->refine_points;
    SolverConfig sc = cfg.solver;
    const auto points = branch_sweep(base, cfg.sweep->betas, sc, opt);
    const ChannelPool pool = points.empty() ? ChannelPool{} : ChannelPool::draw(base);
    const double m = mean_antennas(base);
    Table t = make_table({"beta", "scheme", "branch", "selected", "converged", "residual", "free_energy",
                          "c_joint_per_antenna", "c_sep_per_antenna"});
    bool failed = false;
    for (const SweepPoint &pt : points)
    {
        const Scenario scn = base.with_beta(pt.beta);
        for (const auto &w : pt.warnings)
            log << "warning: " << w << "\n";
        if (pt.solutions.empty())
        {
            failed = true;
            add_row(t, cfg,
                    {pt.beta, std::string(to_string(base.scheme)), std::string("none"), false, false, kNaN, kNaN, kNaN,
                     kNaN});
            continue;
        }
        failed = failed || !pt.solutions[pt.selected].converged;
        for (std::size_t i = 0; i < pt.solutions.size(); ++i)
        {
            const FixedPoint &fp = pt.solutions[i];
            const double cj = fp.converged ? safe_c_joint(scn, fp, cfg, pool) : kNaN;
            const double cs = fp.converged ? c_sep(scn, fp, cfg.solver.integrator, pool, cfg.mi) : kNaN;
            add_row(t, cfg,
                    {pt.beta, std::string(to_string(base.scheme)), std::string(to_string(fp.branch)), i == pt.selected,
                     fp.converged, fp.residual, fp.free_energy, cj / m, cs / m});
        }
    }
    write_table(t, out_path(cfg, out, "sweep"), format_of(cfg, out));
    {
        std::ofstream py(out_path(cfg, out, "plot_sweep.py", false), std::ios::binary);
        py << plot_stub;
    }
    log << "sweep: " << points.size() << " grid points written\n";
    return failed ? kExitConvergence : kExitOk;
}

int cmd_simulate(const RunConfig &cfg, const OutputTarget &out, std::ostream &log)
{
    const SimParams p = cfg.sim_params();
    const auto records = run_trials(p, cfg.simulation->detector, cfg.simulation->trials);
    Table t = make_table({"K", "L", "trials", "moment", "user0_value", "user0_stderr", "pooled_value",
                          "pooled_stderr"});
    for (const MomentExponents &e : low_order_moments())
    {
        const auto u = empirical_antenna_moment(records, 0, 0, e, false);
        const auto pooled = empirical_antenna_moment(records, 0, 0, e, true);
        const std::string name = std::to_string(e.ir) + ":" + std::to_string(e.ii) + ":" + std::to_string(e.jr) +
                                 ":" + std::to_string(e.ji);
        add_row(t, cfg,
                {static_cast<long long>(p.K), static_cast<long long>(p.L),
                 static_cast<long long>(cfg.simulation->trials), name, u.value, u.error, pooled.value, pooled.error});
    }
    write_table(t, out_path(cfg, out, "simulate"), format_of(cfg, out));
    if (cfg.simulation->write_trials)
    {
        Table tr = make_table({"trial", "user", "antenna", "x_re", "x_im", "xhat_re", "xhat_im"});
        for (std::size_t i = 0; i < records.size(); ++i)
            for (std::size_t k = 0; k < records[i].x.size(); ++k)
                for (Eigen::Index a = 0; a < records[i].x[k].size(); ++a)
                    add_row(tr, cfg,
                            {static_cast<long long>(i), static_cast<long long>(k), static_cast<long long>(a),
                             records[i].x[k](a).real(), records[i].x[k](a).imag(), records[i].xhat[k](a).real(),
                             records[i].xhat[k](a).imag()});
        write_table(tr, out_path(cfg, out, "trials"), format_of(cfg, out));
    }
    log << "simulate: " << records.size() << " trials\n";
    return kExitOk;
}

int cmd_validate(const RunConfig &cfg, const OutputTarget &out, std::ostream &log)
{
    if (!cfg.validation)
        throw ConfigError("config key 'validation': block is required for the validate command");
    const SimParams p = cfg.sim_params();
    const ValidationBlock &v = *cfg.validation;
    const double load = static_cast<double>(p.K) / p.L;
    if (std::abs(cfg.scenario.beta - load) > 1e-9 * std::max(1.0, load))
        throw ConfigError("config key 'scenario.beta': must equal simulation K / L = " + format_double(load));

    Scenario pred = cfg.scenario.with_beta(load);
    if (v.prediction_n0)
        pred.n0 = *v.prediction_n0;
    if (v.prediction_nt0)
        pred.nt0 = *v.prediction_nt0;
    const ChannelPool pool = ChannelPool::draw(pred);
    const SolutionSet set = solve_all(pred, cfg, pool);
    const FixedPoint &fp = set.sols[set.selected];
    if (!fp.converged)
    {
        log << "error: prediction fixed point did not converge\n";
        return kExitConvergence;
    }

    Table t = make_table({"check", "estimate", "stderr", "reference", "statistic", "threshold", "pass"});
    bool ok = true;
    const auto records = run_trials(p, cfg.simulation->detector, cfg.simulation->trials);
    const auto rep = compare_moments(records, pred, fp, pool, low_order_moments(), cfg.solver.integrator,
                                     cfg.simulation->pool_users);
    for (const MomentComparison &r : rep.rows)
    {
        const bool pass = std::abs(r.z) < v.z_threshold;
        ok = ok && pass;
        const std::string name = "moment " + std::to_string(r.exps.ir) + ":" + std::to_string(r.exps.ii) + ":" +
                                 std::to_string(r.exps.jr) + ":" + std::to_string(r.exps.ji);
        add_row(t, cfg, {name, r.estimate, r.error, r.prediction, r.z, v.z_threshold, pass});
    }

    const Group &g = pred.groups.front();
    const bool lmmse_scn = g.true_prior.all_gaussian() && g.post_prior.all_gaussian() && pred.matched();
    if (v.corollary && lmmse_scn)
    {
        GaussianScenario gs;
        gs.beta = pred.beta;
        gs.M = g.antennas;
        gs.N = pred.n_rx;
        gs.P = g.true_prior[0].power();
        gs.n0 = pred.n0;
        gs.eig_samples = v.eig_samples;
        gs.seed = sub_seed(cfg.seed, 5);
        const double ref = pred.scheme == Scheme::STS ? c_lmmse_sts(gs) : c_lmmse_ts(gs);
        const double cs = c_sep(pred, fp, cfg.solver.integrator, pool, cfg.mi);
        const double rel = std::abs(cs - ref) / std::max(std::abs(ref), 1e-300);
        const bool pass = rel < v.rel_tol;
        ok = ok && pass;
        add_row(t, cfg, {std::string("c_sep vs closed-form LMMSE"), cs, 0.0, ref, rel, v.rel_tol, pass});
    }
    write_table(t, out_path(cfg, out, "validate"), format_of(cfg, out));
    log << "validate: " << t.rows.size() << " checks, max |z| = " << format_double(rep.max_abs_z) << ", "
        << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kExitOk : kExitValidation;
}

} // namespace rscdma

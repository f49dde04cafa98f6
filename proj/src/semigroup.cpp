#include "obscost/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "obscost/closure_table.hpp"

namespace obscost {

namespace {

std::string describe(const Grid& g, double dt) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(N=%d, L=%.6g, dt=%.6g)", g.N, g.L, dt);
    return buf;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                 double* intercept) {
    double xm = 0, ym = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        xm += xs[i];
        ym += ys[i];
    }
    xm /= double(xs.size());
    ym /= double(xs.size());
    double num = 0, den = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - xm) * (ys[i] - ym);
        den += (xs[i] - xm) * (xs[i] - xm);
    }
    double slope = num / den;
    if (intercept) *intercept = ym - slope * xm;
    return slope;
}

}  // namespace

Grid make_grid(double L, int N) {
    if (!std::isfinite(L) || !(L > 0))
        throw xreal_domain("grid: length must be positive");
    if (N < 16)
        throw xreal_domain("grid: need at least 16 interior nodes for the stencil closures");
    Grid g;
    g.L = L;
    g.N = N;
    g.h = L / (N + 1);
    g.x.resize(size_t(N));
    for (int i = 0; i < N; ++i) g.x[size_t(i)] = double(i + 1) * g.h;
    return g;
}

Eigen::VectorXd DiscreteOperator::flux_vector() const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(grid.N);
    f[0] = 2.0 / grid.h;
    f[1] = -0.5 / grid.h;
    return f;
}

DiscreteOperator build_operator(const Grid& grid) {
    const int n = grid.N;
    if (n < 16)
        throw xreal_domain("build_operator: N too small for the stencil width");
    const double h = grid.h;
    const double inv2h = 1.0 / (2.0 * h);
    const double inv2h3 = 1.0 / (2.0 * h * h * h);
    constexpr int kl = closure::kLeftRows;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(n) * 7);
    for (int i = 0; i < n; ++i) {
        // centered first derivative, zero Dirichlet ends
        if (i - 1 >= 0) trips.emplace_back(i, i - 1, inv2h);
        if (i + 1 < n) trips.emplace_back(i, i + 1, -inv2h);
        // centered third derivative away from both closures
        if (i >= kl && i < n - 2) {
            trips.emplace_back(i, i - 2, inv2h3);
            trips.emplace_back(i, i - 1, -2.0 * inv2h3);
            trips.emplace_back(i, i + 1, 2.0 * inv2h3);
            trips.emplace_back(i, i + 2, -inv2h3);
        }
    }
    // right end: ghosts u_{N+1} = 0 and u_{N+2} = u_N
    trips.emplace_back(n - 2, n - 4, inv2h3);
    trips.emplace_back(n - 2, n - 3, -2.0 * inv2h3);
    trips.emplace_back(n - 2, n - 1, 2.0 * inv2h3);
    trips.emplace_back(n - 1, n - 3, inv2h3);
    trips.emplace_back(n - 1, n - 2, -2.0 * inv2h3);
    trips.emplace_back(n - 1, n - 1, -inv2h3);
    // left end: flux-matched closure block plus its centered tail
    for (int i = 0; i < kl; ++i)
        for (int j = 0; j < kl; ++j)
            trips.emplace_back(i, j, -closure::kLeftBlock[i][j] * inv2h3);
    trips.emplace_back(kl - 2, kl, -inv2h3);
    trips.emplace_back(kl - 1, kl, 2.0 * inv2h3);
    trips.emplace_back(kl - 1, kl + 1, -inv2h3);

    DiscreteOperator op;
    op.grid = grid;
    op.a.resize(n, n);
    op.a.setFromTriplets(trips.begin(), trips.end());
    op.a.makeCompressed();
    return op;
}

std::string_view scheme_name(Scheme s) {
    return s == Scheme::implicit_euler ? "implicit-euler" : "trapezoidal";
}

Scheme parse_scheme(std::string_view name) {
    if (name == "implicit-euler") return Scheme::implicit_euler;
    if (name == "trapezoidal") return Scheme::trapezoidal;
    throw xreal_domain("scheme: expected implicit-euler or trapezoidal");
}

Stepper::Stepper(const DiscreteOperator& op, double dt, Scheme scheme,
                 bool adjoint)
    : dt_(dt), scheme_(scheme), adjoint_(adjoint) {
    if (!std::isfinite(dt) || !(dt > 0))
        throw xreal_domain("evolve: dt must be positive");
    const int n = op.grid.N;
    const double theta = scheme == Scheme::implicit_euler ? 1.0 : 0.5;
    Eigen::SparseMatrix<double> ident(n, n);
    ident.setIdentity();
    Eigen::SparseMatrix<double> implicit_side = ident - (dt * theta) * op.a;
    Eigen::SparseMatrix<double> explicit_side = ident + (dt * (1.0 - theta)) * op.a;
    if (adjoint_) {
        implicit_side = implicit_side.transpose();
        explicit_side = explicit_side.transpose();
    }
    explicit_side_ = std::move(explicit_side);
    explicit_side_.makeCompressed();
    implicit_side.makeCompressed();
    lu_.compute(implicit_side);
    if (lu_.info() != Eigen::Success)
        throw std::runtime_error("evolve: singular implicit factorization " +
                                 describe(op.grid, dt));
}

void Stepper::step(Eigen::VectorXd& u) const {
    if (adjoint_)
        u = explicit_side_ * lu_.solve(u);
    else
        u = lu_.solve(explicit_side_ * u);
}

double StateTrajectory::flux_integral() const {
    double s = 0;
    for (std::uint64_t j = 0; j < flux.size(); ++j) {
        double w = (j == 0 || j + 1 == flux.size()) ? 0.5 : 1.0;
        s += w * flux[j] * flux[j];
    }
    return s * dt;
}

StateTrajectory evolve(const DiscreteOperator& op, const Eigen::VectorXd& u0,
                       double T, double dt, const EvolveOptions& opt) {
    if (u0.size() != op.grid.N)
        throw xreal_domain("evolve: state size does not match the grid");
    if (!std::isfinite(dt) || !(dt > 0))
        throw xreal_domain("evolve: dt must be positive");
    if (!(T >= dt))
        throw xreal_domain("evolve: horizon must cover at least one step");
    const auto steps = std::uint64_t(std::llround(T / dt));
    const std::uint64_t every = opt.store_every ? opt.store_every : 1;

    Stepper st(op, dt, opt.scheme);
    StateTrajectory tr;
    tr.grid = op.grid;
    tr.scheme = opt.scheme;
    tr.dt = dt;
    tr.steps = steps;
    tr.flux.reserve(steps + 1);

    Eigen::VectorXd u = u0;
    auto keep = [&](std::uint64_t j) {
        tr.stored.push_back(j);
        tr.states.push_back(u);
    };
    tr.flux.push_back(op.flux(u));
    keep(0);
    for (std::uint64_t j = 1; j <= steps; ++j) {
        st.step(u);
        tr.flux.push_back(op.flux(u));
        if (j % every == 0 || j == steps) keep(j);
    }
    return tr;
}

double operator_norm_estimate(const DiscreteOperator& op, int iters,
                              unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(op.grid.N);
    for (int i = 0; i < op.grid.N; ++i) v[i] = nd(rng);
    v.normalize();
    double lam = 0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd w = op.a * v;
        w = op.a.transpose() * w;
        lam = w.norm();
        v = w / lam;
    }
    return std::sqrt(lam);
}

double energy_residual(const StateTrajectory& traj) {
    if (traj.states.empty() || traj.stored.front() != 0 ||
        traj.stored.back() != traj.steps)
        throw xreal_domain("energy_residual: trajectory lacks endpoint states");
    const double h = traj.grid.h;
    double e0 = h * traj.states.front().squaredNorm();
    double et = h * traj.states.back().squaredNorm();
    double defect = std::fabs(et + traj.flux_integral() - e0);
    return e0 > 0 ? defect / e0 : defect;
}

double discrete_norm(const Eigen::VectorXd& u, int k, const Grid& grid) {
    if (k < 0 || k > 3)
        throw xreal_domain("discrete_norm: order must be between 0 and 3");
    const double h = grid.h;
    double base = h * u.squaredNorm();
    if (k == 0) return std::sqrt(base);
    // k-fold forward differences of the zero-extended sample vector
    std::vector<double> w(size_t(u.size()) + 2, 0.0);
    for (int i = 0; i < u.size(); ++i) w[size_t(i) + 1] = u[i];
    size_t len = w.size();
    for (int r = 0; r < k; ++r) {
        for (size_t i = 0; i + 1 < len; ++i) w[i] = (w[i + 1] - w[i]) / h;
        --len;
    }
    double der = 0;
    for (size_t i = 0; i < len; ++i) der += w[i] * w[i];
    return std::sqrt(base + h * der);
}

SmoothingFit smoothing_rate_fit(const DiscreteOperator& op,
                                const Eigen::VectorXd& u0, int k, double t_lo,
                                double t_hi, const SmoothingOptions& opt) {
    if (k < 0 || k > 3)
        throw xreal_domain("smoothing_rate_fit: order must be between 0 and 3");
    if (!(t_lo > 0) || !(t_hi > t_lo))
        throw xreal_domain("smoothing_rate_fit: bad time window");
    if (t_hi / t_lo < 10.0)
        throw xreal_domain("smoothing_rate_fit: window narrower than a decade");
    if (t_hi > op.grid.L * (1 + 1e-12))
        throw xreal_domain("smoothing_rate_fit: window exceeds min(T, L)");
    if (opt.samples < 3)
        throw xreal_domain("smoothing_rate_fit: need at least 3 samples");
    double n0 = norm_h(u0, op.grid.h);
    if (!(n0 > 0)) throw xreal_domain("smoothing_rate_fit: zero initial state");

    Eigen::VectorXd u = u0 / n0;
    Stepper st(op, opt.dt, opt.scheme);
    SmoothingFit fit;
    std::vector<double> lx, ly;
    double lnfs = 0;
    if (opt.fs_k) lnfs = xln(*opt.fs_k).value_as_double();

    std::uint64_t done = 0;
    for (int i = 0; i < opt.samples; ++i) {
        double target =
            t_lo * std::pow(t_hi / t_lo, double(i) / double(opt.samples - 1));
        auto want = std::uint64_t(std::llround(target / opt.dt));
        if (want <= done && i > 0) want = done + 1;  // strictly advancing grid
        for (; done < want; ++done) st.step(u);
        double t = double(done) * opt.dt;
        double nv = discrete_norm(u, k, op.grid);
        fit.ts.push_back(t);
        fit.norms.push_back(nv);
        lx.push_back(std::log(t));
        ly.push_back(std::log(nv));
        if (opt.fs_k && std::log(nv) > lnfs - 0.5 * double(k) * std::log(t))
            fit.below_flow_bound = false;
    }
    fit.slope = fit_slope(lx, ly, &fit.intercept);
    return fit;
}

ObservationReport observation_checks(const DiscreteOperator& op,
                                     const Eigen::VectorXd& f0,
                                     const Eigen::VectorXd& g0,
                                     const ObservationParams& p) {
    const Grid& g = op.grid;
    if (f0.size() != g.N || g0.size() != g.N)
        throw xreal_domain("observation_checks: state size does not match the grid");
    if (!(p.t >= p.dt)) throw xreal_domain("observation_checks: t must cover a step");
    const double h = g.h;

    ObservationReport rep;
    auto push = [&](std::string name, double lhs, double bound, bool pass) {
        rep.entries.push_back({std::move(name), lhs, bound, bound - lhs, pass});
    };

    Eigen::VectorXd f = f0 / norm_h(f0, h);
    Eigen::VectorXd gv = g0 / norm_h(g0, h);

    // flux identity needs the scheme's own quadrature: trapezoidal steps with
    // midpoint flux samples make the polarized energy identity exact up to
    // the PSD closure defect
    const auto steps = std::uint64_t(std::llround(p.t / p.dt));
    Stepper st(op, p.dt, Scheme::trapezoidal);
    Eigen::VectorXd uf = f, ug = gv;
    double flux_ff = 0, flux_gg = 0, flux_fg = 0, gen_sum = 0;
    for (std::uint64_t j = 0; j < steps; ++j) {
        Eigen::VectorXd pf = uf, pg = ug;
        st.step(uf);
        st.step(ug);
        Eigen::VectorXd mf_state = 0.5 * (pf + uf);
        Eigen::VectorXd mg_state = 0.5 * (pg + ug);
        double mf = op.flux(mf_state);
        double mg = op.flux(mg_state);
        flux_ff += p.dt * mf * mf;
        flux_gg += p.dt * mg * mg;
        flux_fg += p.dt * mf * mg;
        // exact step increment of <u, v>_h for the trapezoidal map
        gen_sum += p.dt * (inner_h(op.a * mf_state, mg_state, h) +
                           inner_h(mf_state, op.a * mg_state, h));
    }
    double ip0 = inner_h(f, gv, h);
    double ipt = inner_h(uf, ug, h);

    push("energy_nonincrease", norm_h(uf, h), norm_h(f, h) * (1 + 1e-12),
         norm_h(uf, h) <= norm_h(f, h) * (1 + 1e-12));
    {
        // polarized discrete identity: holds to solve roundoff
        double lhs = std::fabs(ipt - ip0 - gen_sum);
        push("flux_identity_discrete", lhs, 1e-9, lhs <= 1e-9);
        // continuum flux form differs by the PSD closure defect, O(h^2)
        double cont = std::fabs(ipt - ip0 + flux_fg);
        double bound = std::max(p.quad_tol, 10.0 * h * h * std::max(p.t, 1.0));
        push("flux_identity_vi", cont, bound, cont <= bound);
    }
    {
        double lhs = std::fabs(ipt);
        double bound = std::fabs(ip0) +
                       std::sqrt(flux_ff * flux_gg) * std::max(p.t, 1.0) + 1e-6;
        push("cauchy_schwarz_vi", lhs, bound, lhs <= bound);
    }
    {
        auto perp = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dir) {
            return (v - dir * (inner_h(v, dir, h) / inner_h(dir, dir, h))).eval();
        };
        double before = norm_h(perp(gv, f), h);
        double after = norm_h(perp(ug, uf), h);
        push("projection_vii", after, before + 1e-10, after <= before + 1e-10);
    }
    {
        // generator consistency: damp the undamped stiff content first so the
        // difference quotient sees the smooth part of the flow
        Stepper damp(op, p.dt, Scheme::implicit_euler);
        Eigen::VectorXd v = f;
        for (std::uint64_t j = 0; j < steps; ++j) damp.step(v);
        Eigen::VectorXd av = op.a * v;
        std::vector<double> lx, ly;
        for (int i = 0; i < p.delta_samples; ++i) {
            double delta = p.delta_lo * std::pow(p.delta_hi / p.delta_lo,
                                                 double(i) /
                                                     double(p.delta_samples - 1));
            const int sub = 64;
            Stepper fine(op, delta / sub, Scheme::trapezoidal);
            Eigen::VectorXd w = v;
            for (int s = 0; s < sub; ++s) fine.step(w);
            double r = norm_h(((w - v) / delta - av).eval(), h);
            lx.push_back(std::log(delta));
            ly.push_back(std::log(r));
        }
        double ic = 0;
        double slope = fit_slope(lx, ly, &ic);
        push("generator_iii_slope", slope, 1.3, slope >= 0.7 && slope <= 1.3);
        double cfit = std::exp(ic);
        double cbound = 0.75 * norm_h((op.a * av).eval(), h);
        push("generator_iii_constant", cfit, cbound, cfit <= cbound);
    }

    rep.measured_op_norm = operator_norm_estimate(op);

    rep.all_pass = true;
    for (const auto& e : rep.entries) rep.all_pass = rep.all_pass && e.pass;
    return rep;
}

void export_csv(const StateTrajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_csv: cannot open " + path);
    out << "t,flux,l2_norm,h1_norm,h3_norm\n";
    char line[192];
    for (size_t i = 0; i < traj.stored.size(); ++i) {
        std::uint64_t j = traj.stored[i];
        const Eigen::VectorXd& u = traj.states[i];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      traj.time_at(j), traj.flux[j],
                      discrete_norm(u, 0, traj.grid),
                      discrete_norm(u, 1, traj.grid),
                      discrete_norm(u, 3, traj.grid));
        out << line;
    }
    if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

void write_snapshot(const std::string& path, const Eigen::VectorXd& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("snapshot: cannot open " + path);
    char hdr[16] = {};
    std::memcpy(hdr, "KDVS", 4);
    std::uint16_t version = 1;
    std::uint32_t n = std::uint32_t(state.size());
    std::memcpy(hdr + 4, &version, 2);
    std::memcpy(hdr + 6, &n, 4);
    out.write(hdr, 16);
    out.write(reinterpret_cast<const char*>(state.data()),
              std::streamsize(sizeof(double)) * state.size());
    if (!out) throw std::runtime_error("snapshot: write failed for " + path);
}

Eigen::VectorXd read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("snapshot: cannot open " + path);
    char hdr[16];
    in.read(hdr, 16);
    if (!in || std::memcmp(hdr, "KDVS", 4) != 0)
        throw std::runtime_error("snapshot: bad magic in " + path);
    std::uint16_t version = 0;
    std::uint32_t n = 0;
    std::memcpy(&version, hdr + 4, 2);
    std::memcpy(&n, hdr + 6, 4);
    if (version != 1)
        throw std::runtime_error("snapshot: unsupported version in " + path);
    Eigen::VectorXd state(n);
    in.read(reinterpret_cast<char*>(state.data()),
            std::streamsize(sizeof(double)) * n);
    if (!in) throw std::runtime_error("snapshot: truncated payload in " + path);
    return state;
}

}  // namespace obscost

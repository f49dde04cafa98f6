#include "obscost/observability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "obscost/epsilon.hpp"

namespace obscost {

namespace {

// two-pass modified Gram-Schmidt projection of w against an h-orthonormal set
Eigen::VectorXd project_out(const Eigen::VectorXd& w,
                            const std::vector<Eigen::VectorXd>& basis,
                            double h) {
    Eigen::VectorXd r = w;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) r -= inner_h(r, b, h) * b;
    return r;
}

double orthonormality_error(const std::vector<Eigen::VectorXd>& basis,
                            double h) {
    double err = 0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) {
            double ip = inner_h(basis[i], basis[j], h);
            err = std::max(err, std::abs(ip - (i == j ? 1.0 : 0.0)));
        }
    return err;
}

void canonical_sign(Eigen::VectorXd& v) {
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
}

// ||lambda v - A v||_h for a complex pair given as real/imaginary parts
double pair_residual(const DiscreteOperator& op, std::complex<double> lam,
                     const Eigen::VectorXd& vr, const Eigen::VectorXd& vi) {
    Eigen::VectorXd ar = op.a * vr;
    Eigen::VectorXd ai = op.a * vi;
    Eigen::VectorXd rr = lam.real() * vr - lam.imag() * vi - ar;
    Eigen::VectorXd ri = lam.real() * vi + lam.imag() * vr - ai;
    return std::sqrt(op.grid.h * (rr.squaredNorm() + ri.squaredNorm()));
}

}  // namespace

Gramian assemble_gramian(const DiscreteOperator& op, double T, double dt,
                         const GramianOptions& opt) {
    const Grid& g = op.grid;
    if (!(dt > 0)) throw xreal_domain("assemble_gramian: dt must be positive");
    if (T < 0) throw xreal_domain("assemble_gramian: horizon must be >= 0");
    double work = double(g.N) * (T / dt);
    if (work > opt.work_budget) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "assemble_gramian: work N*(T/dt) = %.3g exceeds the "
                      "budget %.3g",
                      work, opt.work_budget);
        throw xreal_domain(buf);
    }
    const auto steps = std::llround(T / dt);
    if (std::abs(double(steps) * dt - T) > 1e-9 * std::max(T, 1.0))
        throw xreal_domain("assemble_gramian: horizon is not a whole number "
                           "of steps");

    Gramian out;
    out.grid = g;
    out.T = T;
    out.dt = dt;
    out.scheme = opt.scheme;
    out.weights = Eigen::VectorXd::Constant(steps + 1, dt);
    out.weights[0] = 0.5 * dt;
    out.weights[steps] = 0.5 * dt;

    // z_k = (M^T)^k f carries the flux samples of every coordinate trajectory
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.N, g.N);
    Eigen::VectorXd z = op.flux_vector();
    Stepper adjoint(op, dt, opt.scheme, /*adjoint=*/true);
    for (long long k = 0;; ++k) {
        acc.selfadjointView<Eigen::Lower>().rankUpdate(z, out.weights[k]);
        if (k == steps) break;
        adjoint.step(z);
    }
    acc /= g.h;  // basis e_i/sqrt(h)
    out.g = acc.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.g);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("assemble_gramian: eigensolver failed");
    out.c_num = es.eigenvalues()[0];
    Eigen::VectorXd a = es.eigenvectors().col(0);
    canonical_sign(a);
    out.min_state = a / std::sqrt(g.h);

    double floor = -1e-10 * out.g.trace() / double(g.N);
    if (out.c_num < floor) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "assemble_gramian: PSD floor violated (lambda_min = "
                      "%.6g, floor = %.6g)",
                      out.c_num, floor);
        throw std::runtime_error(buf);
    }
    return out;
}

double gramian_quadratic_form(const Gramian& gram, const Eigen::VectorXd& u0) {
    if (u0.size() != gram.g.rows())
        throw xreal_domain("gramian_quadratic_form: state size does not "
                           "match the Gramian");
    Eigen::VectorXd a = std::sqrt(gram.grid.h) * u0;
    return a.dot(gram.g * a);
}

SubspaceM uncontrollable_subspace(const DiscreteOperator& op, double tol) {
    const Grid& g = op.grid;
    Eigen::MatrixXd dense(op.a);
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success)
        throw std::runtime_error(
            "uncontrollable_subspace: eigensolver failed to converge");

    struct Hit {
        std::complex<double> lambda;
        Eigen::VectorXd vr, vi;
        double residual;
    };
    std::vector<Hit> hits;
    for (int i = 0; i < g.N; ++i) {
        std::complex<double> lam = es.eigenvalues()[i];
        if (std::abs(lam.real()) >= tol) continue;
        // keep one representative per conjugate pair
        if (lam.imag() < -1e-12 * (1.0 + std::abs(lam))) continue;
        Eigen::VectorXd vr = es.eigenvectors().col(i).real();
        Eigen::VectorXd vi = es.eigenvectors().col(i).imag();
        double nv = std::sqrt(g.h * (vr.squaredNorm() + vi.squaredNorm()));
        vr /= nv;
        vi /= nv;
        double fr = op.flux(vr);
        double fi = (2.0 * vi[0] - 0.5 * vi[1]) / g.h;
        if (std::hypot(fr, fi) >= tol) continue;
        hits.push_back({lam, vr, vi, pair_residual(op, lam, vr, vi)});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return std::abs(a.lambda) < std::abs(b.lambda);
    });

    SubspaceM m;
    m.grid = g;
    m.tol = tol;
    auto add = [&](const Eigen::VectorXd& cand, std::complex<double> lam,
                   double residual) {
        double nc = norm_h(cand, g.h);
        if (nc <= 1e-10) return;
        Eigen::VectorXd w = project_out(cand / nc, m.basis, g.h);
        double nw = norm_h(w, g.h);
        if (nw <= 1e-8) return;  // dependent direction (conjugate overlap)
        w /= nw;
        canonical_sign(w);
        m.basis.push_back(w);
        m.lambdas.push_back(lam);
        m.residuals.push_back(residual);
    };
    for (const auto& hit : hits) {
        add(hit.vr, hit.lambda, hit.residual);
        add(hit.vi, hit.lambda, hit.residual);
    }
    for (const auto& b : m.basis) m.flux.push_back(std::abs(op.flux(b)));
    m.ortho_error = orthonormality_error(m.basis, g.h);
    return m;
}

double restricted_constant(const Gramian& gram, const SubspaceM& m) {
    if (m.empty()) return gram.c_num;
    const int n = int(gram.g.rows());
    if (m.grid.N != n ||
        std::abs(m.grid.L - gram.grid.L) > 1e-12 * std::max(1.0, gram.grid.L))
        throw xreal_domain(
            "restricted_constant: subspace grid does not match the Gramian");
    for (const auto& b : m.basis)
        if (b.size() != n)
            throw xreal_domain("restricted_constant: basis dimension "
                               "mismatch");
    const int k = int(m.size());
    if (k >= n)
        throw xreal_domain("restricted_constant: subspace spans the whole "
                           "space, nothing left to observe");

    Eigen::MatrixXd b(n, k);
    for (int j = 0; j < k; ++j)
        b.col(j) = std::sqrt(gram.grid.h) * m.basis[j];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd z = q.rightCols(n - k);
    Eigen::MatrixXd s = z.transpose() * gram.g * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("restricted_constant: eigensolver failed");
    return es.eigenvalues()[0];
}

BGammaReport b_gamma_check(const DiscreteOperator& op,
                           const Eigen::VectorXd& g_state,
                           std::complex<double> lambda, double k1,
                           double gamma) {
    const Grid& g = op.grid;
    if (g_state.size() != g.N)
        throw xreal_domain("b_gamma_check: state size does not match the "
                           "grid");
    BGammaReport rep;
    rep.norm = norm_h(g_state, g.h);
    rep.h3_norm = discrete_norm(g_state, 3, g);
    rep.boundary_left = g_state[0];
    rep.boundary_right = g_state[g.N - 1];
    rep.flux_abs = std::abs(op.flux(g_state));
    Eigen::VectorXd av = op.a * g_state;
    Eigen::VectorXd rr = lambda.real() * g_state - av;
    rep.residual = std::sqrt(g.h * rr.squaredNorm() +
                             lambda.imag() * lambda.imag() * g.h *
                                 g_state.squaredNorm());
    rep.norm_ok = std::abs(rep.norm - 1.0) <= 1e-6;
    rep.h3_ok = rep.h3_norm <= k1;
    rep.flux_ok = rep.flux_abs < gamma;
    rep.residual_ok = rep.residual < gamma;
    rep.all_pass = rep.norm_ok && rep.h3_ok && rep.flux_ok && rep.residual_ok;
    return rep;
}

namespace {

// window evolution of the current family over [0, 2 t1]: flux quadratures,
// the 64-sample t-bar scan, and the smoothed states at the chosen time. The
// probe column rides along for the contraction pair but stays out of the
// objective.
struct ScanResult {
    std::vector<double> member_flux;          // int_0^{2 t1} phi^2 per member
    double t_bar = 0;
    double scan_objective = 0;
    std::vector<double> boundary_traces;      // phi_i at t_bar
    std::vector<Eigen::VectorXd> smoothed;    // S(t_bar) members
    Eigen::VectorXd smoothed_probe;
};

ScanResult scan_window(const DiscreteOperator& op,
                       const std::vector<Eigen::VectorXd>& family,
                       const Eigen::VectorXd* probe,
                       const GramSchmidtParams& params) {
    const int samples = params.scan_samples;
    const double dt = params.t1 / double(samples);
    const int total = 2 * samples;
    const std::size_t s = family.size();

    std::vector<Eigen::VectorXd> cols = family;
    if (probe) cols.push_back(*probe);
    Stepper flow(op, dt, params.scheme);

    std::vector<std::vector<double>> traces(cols.size());
    std::vector<std::vector<Eigen::VectorXd>> window(cols.size());
    ScanResult out;
    out.member_flux.assign(s, 0.0);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        Eigen::VectorXd u = cols[i];
        double prev = op.flux(u);
        double quad = 0;
        for (int j = 1; j <= total; ++j) {
            flow.step(u);
            double f = op.flux(u);
            quad += 0.5 * dt * (prev * prev + f * f);
            prev = f;
            if (j >= samples && j < total) {  // t1, t1+dt, ..., 2 t1 - dt
                traces[i].push_back(f);
                window[i].push_back(u);
            }
        }
        if (i < s) out.member_flux[i] = quad;
    }

    int best = 0;
    double best_obj = 0;
    for (int j = 0; j < samples; ++j) {
        double obj = 0;
        for (std::size_t i = 0; i < s; ++i) obj += traces[i][j] * traces[i][j];
        if (j == 0 || obj < best_obj) {
            best_obj = obj;
            best = j;
        }
    }
    out.t_bar = double(samples + best) * dt;
    out.scan_objective = best_obj;
    for (std::size_t i = 0; i < s; ++i) {
        out.boundary_traces.push_back(traces[i][best]);
        out.smoothed.push_back(window[i][best]);
    }
    if (probe) out.smoothed_probe = window[s][best];
    return out;
}

// modified Gram-Schmidt with one reorthogonalization pass; returns the
// orthonormal family and fills the upper-triangular coefficient matrix
std::vector<Eigen::VectorXd> mgs(const std::vector<Eigen::VectorXd>& gs,
                                 double h, Eigen::MatrixXd* coeffs) {
    const int s = int(gs.size());
    if (coeffs) *coeffs = Eigen::MatrixXd::Zero(s, s);
    std::vector<Eigen::VectorXd> ys;
    for (int j = 0; j < s; ++j) {
        Eigen::VectorXd w = gs[j];
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < int(ys.size()); ++i) {
                double r = inner_h(w, ys[i], h);
                w -= r * ys[i];
                if (coeffs) (*coeffs)(i, j) += r;
            }
        double nw = norm_h(w, h);
        if (nw <= 1e-12 * std::max(1.0, norm_h(gs[j], h)))
            throw std::runtime_error(
                "gram_schmidt_procedure: family degenerated under smoothing");
        if (coeffs) (*coeffs)(j, j) = nw;
        ys.push_back(w / nw);
    }
    return ys;
}

}  // namespace

GramSchmidtRun gram_schmidt_procedure(const DiscreteOperator& op,
                                      const Eigen::VectorXd& u0,
                                      const GramSchmidtParams& params) {
    const Grid& g = op.grid;
    if (u0.size() != g.N)
        throw xreal_domain("gram_schmidt_procedure: seed size does not match "
                           "the grid");
    if (std::abs(norm_h(u0, g.h) - 1.0) > 1e-6)
        throw xreal_domain("gram_schmidt_procedure: seed must have unit "
                           "h-norm");
    if (!(params.t1 > 0) || !(params.gamma > 0))
        throw xreal_domain("gram_schmidt_procedure: t1 and gamma must be "
                           "positive");
    if (params.level_cap < 1 || params.max_level_bound < 1)
        throw xreal_domain("gram_schmidt_procedure: level caps must be >= 1");
    if (params.scan_samples < 2)
        throw xreal_domain("gram_schmidt_procedure: need at least 2 scan "
                           "samples");
    for (double d : params.delta_schedule)
        if (!(d > 0) || !(d < std::min(0.5, params.t1)))
            throw xreal_domain("gram_schmidt_procedure: delta schedule "
                               "entries must lie in (0, min(1/2, t1))");

    GramSchmidtRun run;
    run.params = params;
    run.grid = g;
    run.ktilde_used =
        params.ktilde ? *params.ktilde : operator_norm_estimate(op);
    const double dt = params.t1 / double(params.scan_samples);
    const int cap = std::min(params.level_cap, params.max_level_bound);

    auto delta_at = [&](int level) {
        if (!params.delta_schedule.empty()) {
            std::size_t i = std::min(std::size_t(level - 1),
                                     params.delta_schedule.size() - 1);
            return params.delta_schedule[i];
        }
        return 0.5 * std::min(0.5, params.t1);
    };

    // level-1 smoothing S(t1); the seed's flux integral is the c_0 budget
    StateTrajectory seed = evolve(op, u0, params.t1, dt,
                                  {params.scheme,
                                   std::uint64_t(params.scan_samples)});
    run.epsilon_seed = seed.flux_integral();
    Eigen::VectorXd y = seed.states.back();
    double ny = norm_h(y, g.h);
    if (!(ny > 0))
        throw std::runtime_error(
            "gram_schmidt_procedure: seed state vanished under the flow");
    y /= ny;

    std::vector<Eigen::VectorXd> family{y};
    const XReal xg = XReal::from_value(params.gamma);
    const XReal xkt = XReal::from_value(run.ktilde_used);
    const XReal xt1 = XReal::from_value(params.t1);
    XReal cn = XReal::from_value(run.epsilon_seed);

    double pending_before = 0, pending_after = 0;
    Eigen::MatrixXd pending_coeffs;
    for (int n = 1;; ++n) {
        GramSchmidtLevel lev;
        lev.level = n;
        lev.delta_n = delta_at(n);
        cn = c_next(n - 1, cn, XReal::from_value(lev.delta_n), xg, xkt, xt1);
        lev.c_n = cn;
        lev.contraction_before = pending_before;
        lev.contraction_after = pending_after;
        lev.coeffs = pending_coeffs;

        Eigen::VectorXd w = op.a * family.back();
        Eigen::VectorXd yperp = project_out(w, family, g.h);
        lev.residual = norm_h(yperp, g.h);

        bool stop_residual = lev.residual < 0.5 * params.gamma;
        bool stop_cap = !stop_residual && n >= cap;
        const Eigen::VectorXd* probe = nullptr;
        Eigen::VectorXd probe_vec;
        if (!stop_residual && !stop_cap) {
            family.push_back(yperp / lev.residual);
            probe_vec = op.a * family.back();
            Eigen::VectorXd pr = project_out(probe_vec, family, g.h);
            pending_before = norm_h(pr, g.h);
            probe = &probe_vec;
        }

        ScanResult scan = scan_window(op, family, probe, params);
        lev.family = family;
        lev.ortho_error = orthonormality_error(family, g.h);
        lev.member_flux = scan.member_flux;
        lev.t_bar = scan.t_bar;
        lev.scan_objective = scan.scan_objective;
        lev.boundary_traces = scan.boundary_traces;
        XReal budget = XReal::from_value(2.0) * cn;
        for (double q : lev.member_flux)
            lev.flux_within_budget.push_back(
                !(XReal::from_value(q) > budget));

        if (stop_residual || stop_cap) {
            run.levels.push_back(std::move(lev));
            if (stop_residual) {
                run.stop_reason = "residual-below-gamma/2";
                // projected eigenproblem on span(family)
                const int s = int(family.size());
                Eigen::MatrixXd p(s, s);
                for (int j = 0; j < s; ++j) {
                    Eigen::VectorXd av = op.a * family[j];
                    for (int i = 0; i < s; ++i)
                        p(i, j) = inner_h(family[i], av, g.h);
                }
                Eigen::EigenSolver<Eigen::MatrixXd> pe(p);
                if (pe.info() != Eigen::Success)
                    throw std::runtime_error(
                        "gram_schmidt_procedure: projected eigensolver "
                        "failed");
                GramSchmidtCandidate best;
                bool have = false;
                for (int k = 0; k < s; ++k) {
                    std::complex<double> lam = pe.eigenvalues()[k];
                    Eigen::VectorXd gr = Eigen::VectorXd::Zero(g.N);
                    Eigen::VectorXd gi = Eigen::VectorXd::Zero(g.N);
                    for (int j = 0; j < s; ++j) {
                        std::complex<double> c = pe.eigenvectors()(j, k);
                        gr += c.real() * family[j];
                        gi += c.imag() * family[j];
                    }
                    double nv =
                        std::sqrt(g.h * (gr.squaredNorm() + gi.squaredNorm()));
                    gr /= nv;
                    gi /= nv;
                    double res = pair_residual(op, lam, gr, gi);
                    if (!have || res < best.residual) {
                        best = {lam, gr, gi, res};
                        have = true;
                    }
                }
                // canonical phase: largest-modulus component real positive
                int imax = 0;
                (best.g.cwiseAbs2() + best.g_imag.cwiseAbs2())
                    .maxCoeff(&imax);
                std::complex<double> c(best.g[imax], best.g_imag[imax]);
                std::complex<double> ph = std::conj(c) / std::abs(c);
                Eigen::VectorXd gr =
                    ph.real() * best.g - ph.imag() * best.g_imag;
                Eigen::VectorXd gi =
                    ph.real() * best.g_imag + ph.imag() * best.g;
                best.g = gr;
                best.g_imag = gi;
                run.candidate = best;
                run.b_gamma = b_gamma_check(op, best.g, best.lambda,
                                            params.k_radius, params.gamma);
            } else {
                run.stop_reason = (params.level_cap > params.max_level_bound &&
                                   n >= params.max_level_bound)
                                      ? "level-cap"
                                      : "budget-exceeded";
            }
            return run;
        }

        // transition: smooth the family at t_bar and re-orthonormalize
        std::vector<Eigen::VectorXd> next =
            mgs(scan.smoothed, g.h, &pending_coeffs);
        Eigen::VectorXd after = project_out(scan.smoothed_probe, next, g.h);
        pending_after = norm_h(after, g.h);
        run.levels.push_back(std::move(lev));
        family = std::move(next);
    }
}

}  // namespace obscost

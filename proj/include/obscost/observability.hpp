#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "obscost/semigroup.hpp"
#include "obscost/xreal.hpp"

namespace obscost {

// Flux-trace Gramian over the h-orthonormal coordinate basis e_i/sqrt(h):
//   G_ij = sum_k w_k phi_i(t_k) phi_j(t_k),
// where phi_i is the boundary-derivative trace of the trajectory started at
// e_i/sqrt(h) and w_k are trapezoidal weights in time. All N flux traces are
// the coordinates of the single adjoint trajectory z_k = (M^T)^k f (f the
// flux representer, M the one-step map), so the assembly propagates one
// vector through the transposed factorization. lambda_min(G) is the numerical
// observability constant: the minimum of the flux quadrature over unit-h-norm
// initial states.
struct Gramian {
    Grid grid;
    double T = 0;
    double dt = 0;
    Scheme scheme = Scheme::trapezoidal;
    Eigen::MatrixXd g;          // symmetric N x N, basis-coefficient form
    Eigen::VectorXd weights;    // w_k, k = 0..steps
    double c_num = 0;           // lambda_min(g)
    Eigen::VectorXd min_state;  // minimizing direction as a grid state, ||.||_h = 1
};

struct GramianOptions {
    Scheme scheme = Scheme::trapezoidal;
    double work_budget = 1e8;  // guard on N * (T/dt)
};

// T = 0 degenerates to the single-sample rank-<=1 Gramian. Throws
// xreal_domain when N * (T/dt) exceeds the work budget (or on a bad T/dt)
// and std::runtime_error if the assembled matrix violates the
// positive-semidefiniteness floor (eigenvalues >= -1e-10 * trace / N).
Gramian assemble_gramian(const DiscreteOperator& op, double T, double dt,
                         const GramianOptions& opt = {});

// u0^T G u0 for a plain grid state u0: equals the trapezoidal time quadrature
// of the squared flux of evolve(u0) up to roundoff (linearity of the scheme)
double gramian_quadratic_form(const Gramian& gram, const Eigen::VectorXd& u0);

// Numerical stand-in for the uncontrollable subspace M: eigenvectors of A_h
// whose eigenvalue real part and boundary derivative are both below tol,
// orthonormalized in the h-inner product. lambdas/residuals are recorded per
// member from the source eigenpair (complex pairs contribute their real and
// imaginary parts as two members sharing the pair's data).
struct SubspaceM {
    Grid grid;
    double tol = 0;
    std::vector<Eigen::VectorXd> basis;         // h-orthonormal grid states
    std::vector<std::complex<double>> lambdas;  // one per member
    std::vector<double> residuals;              // ||A_h v - lambda v||_h, source pair
    std::vector<double> flux;                   // |phi(member)| after orthonormalization
    double ortho_error = 0;                     // max |<b_i, b_j>_h - delta_ij|

    std::size_t size() const { return basis.size(); }
    bool empty() const { return basis.empty(); }
};

// Full dense eigendecomposition; throws std::runtime_error when the
// eigensolver fails to converge. Empty at non-critical lengths.
SubspaceM uncontrollable_subspace(const DiscreteOperator& op, double tol);

// lambda_min of the Gramian deflated to the orthogonal complement of span(m).
// Equals gram.c_num exactly for empty m; throws std::invalid_argument when
// the grids disagree or m spans the whole space (nothing left to observe).
double restricted_constant(const Gramian& gram, const SubspaceM& m);

// Membership diagnostics for the gamma-almost-eigenfunction ball: unit h-norm,
// discrete H^3 norm within the radius k1, boundary derivative below gamma,
// eigen-residual ||lambda g - A_h g||_h below gamma.
struct BGammaReport {
    double norm = 0;            // ||g||_h
    double h3_norm = 0;
    double boundary_left = 0;   // value at the first interior node
    double boundary_right = 0;  // value at the last interior node
    double flux_abs = 0;        // |g_x(0)| = |phi(g)|
    double residual = 0;        // ||lambda g - A_h g||_h
    bool norm_ok = false;
    bool h3_ok = false;
    bool flux_ok = false;
    bool residual_ok = false;
    bool all_pass = false;
};

BGammaReport b_gamma_check(const DiscreteOperator& op,
                           const Eigen::VectorXd& g_state,
                           std::complex<double> lambda, double k1,
                           double gamma);

// Desk-scale parameters of the flow-based Gram-Schmidt search. ktilde
// defaults to the measured operator norm; the delta schedule defaults to the
// constant min(1/2, t1)/2 (its last entry repeats when levels outrun it).
struct GramSchmidtParams {
    double t1 = 1.0;
    double gamma = 1e-2;
    double k_radius = 10.0;              // H^3 radius used by the B_gamma diagnostics
    std::vector<double> delta_schedule;  // delta_n per level; empty -> default
    std::optional<double> ktilde;
    int level_cap = 16;        // caller's level budget -> "budget-exceeded"
    int max_level_bound = 64;  // hard bound on levels -> "level-cap"
    int scan_samples = 64;     // t-bar candidates in [t1, 2 t1]
    Scheme scheme = Scheme::trapezoidal;
};

// One level of the run. The residual is tested on the first n members (the
// level-n family proper); when the test fails the normalized residual
// direction joins immediately, so the recorded family holds n+1 members and
// the smoothing scan covers all of them. A level stopped by residual or cap
// keeps its tested n members. t_bar, boundary traces and the scan objective
// describe the smoothing window of this family; coeffs holds the triangular
// Gram-Schmidt coefficients and contraction_before/after the flow projection
// pair of the transition that produced this family (levels >= 2).
struct GramSchmidtLevel {
    int level = 0;
    std::vector<Eigen::VectorXd> family;  // h-orthonormal y_i
    double ortho_error = 0;               // max |<y_i, y_j>_h - delta_ij|
    double residual = 0;                  // ||Pi_perp(A_h y_last)||_h vs gamma/2
    double delta_n = 0;
    XReal c_n;                         // flux budget from the c_n recursion
    std::vector<double> member_flux;   // int_0^{2 t1} phi(S(s) y_i)^2 ds
    std::vector<bool> flux_within_budget;  // member_flux <= 2 c_n
    double t_bar = 0;                      // chosen smoothing time in [t1, 2 t1]
    double scan_objective = 0;             // minimized sum_i phi_i(s)^2
    std::vector<double> boundary_traces;   // phi_i at t_bar
    Eigen::MatrixXd coeffs;  // upper-triangular Gram-Schmidt coefficients
    double contraction_before = 0;
    double contraction_after = 0;
};

// Candidate almost-eigenpair from the projected eigenproblem on the final
// span: g/g_imag are the real and imaginary parts of the normalized span
// eigenvector (g_imag is zero for a real eigenvalue) and residual is
// ||lambda g - A_h g||_h evaluated on the complex pair.
struct GramSchmidtCandidate {
    std::complex<double> lambda;
    Eigen::VectorXd g;
    Eigen::VectorXd g_imag;
    double residual = 0;
};

struct GramSchmidtRun {
    GramSchmidtParams params;
    Grid grid;
    double ktilde_used = 0;
    double epsilon_seed = 0;  // measured seed flux integral over [0, t1]
    std::vector<GramSchmidtLevel> levels;
    std::string stop_reason;  // residual-below-gamma/2 | budget-exceeded | level-cap
    std::optional<GramSchmidtCandidate> candidate;  // set on residual stop
    std::optional<BGammaReport> b_gamma;            // diagnostics of the candidate
};

// Flow-based Gram-Schmidt search for an almost-eigenfunction: smooth the seed
// by S(t1); per level, test ||Pi_perp(A_h y_last)||_h against gamma/2, append
// the normalized residual direction on failure, smooth the family by S(t_bar)
// with t_bar minimizing the summed squared boundary traces over scan_samples
// points of [t1, 2 t1], and re-orthonormalize (modified Gram-Schmidt plus one
// reorthogonalization pass). Reaching level_cap reports budget-exceeded;
// reaching max_level_bound reports level-cap; neither throws. Requires
// ||u0||_h = 1.
GramSchmidtRun gram_schmidt_procedure(const DiscreteOperator& op,
                                      const Eigen::VectorXd& u0,
                                      const GramSchmidtParams& params = {});

}  // namespace obscost

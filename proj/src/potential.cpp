#include "isinglab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "isinglab/rng.hpp"

namespace ilab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

void check_mask(const ChainModel& ch, const std::vector<std::uint8_t>& mask, const char* who) {
    if (static_cast<int>(mask.size()) != ch.size())
        throw std::invalid_argument(std::string(who) + ": mask size mismatch");
}

// Symmetrized negative generator D^{1/2} (-L) D^{-1/2} plus optional
// diagonal kill rates, restricted to the states flagged in keep.  The
// diagonal always carries the full exit rate, so a restriction yields the
// absorbing (Dirichlet) operator.
struct SymOp {
    std::vector<int> states;   // local row -> global state
    Eigen::VectorXd sqrt_mu;   // per local row
    SpMat A;
};

SymOp build_sym(const ChainModel& ch, const std::vector<double>* kill,
                const std::vector<std::uint8_t>* keep) {
    const int n = ch.size();
    SymOp op;
    std::vector<int> local(n, -1);
    for (int i = 0; i < n; ++i) {
        if (keep && !(*keep)[i]) continue;
        local[i] = static_cast<int>(op.states.size());
        op.states.push_back(i);
    }
    const int m = static_cast<int>(op.states.size());
    op.sqrt_mu.resize(m);
    for (int r = 0; r < m; ++r) op.sqrt_mu[r] = std::sqrt(ch.mu()[op.states[r]]);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
        const int i = op.states[r];
        double diag = kill ? (*kill)[i] : 0.0;
        for (const auto& [j, c] : ch.adjacency()[i]) {
            diag += c / ch.mu()[i]; // full exit rate, including dropped edges
            if (local[j] < 0 || local[j] <= r) continue;
            const double off = -c / (op.sqrt_mu[r] * op.sqrt_mu[local[j]]);
            trip.emplace_back(r, local[j], off);
            trip.emplace_back(local[j], r, off);
        }
        trip.emplace_back(r, r, diag);
    }
    op.A.resize(m, m);
    op.A.setFromTriplets(trip.begin(), trip.end());
    return op;
}

// Rayleigh-quotient inverse iteration for the smallest eigenpair of a
// symmetric PSD sparse matrix, optionally deflating one known eigenvector.
double inverse_iteration(const SpMat& A, const Eigen::VectorXd* deflate, Eigen::VectorXd* out) {
    const int n = static_cast<int>(A.rows());
    double max_diag = 0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, A.coeff(i, i));
    const double delta = 1e-8 * std::max(max_diag, 1e-30);
    SpMat M = A;
    for (int i = 0; i < n; ++i) M.coeffRef(i, i) += delta;
    Eigen::SimplicialLDLT<SpMat> solver;
    solver.compute(M);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("inverse iteration: factorization failed");

    Rng rng(0x5eedUL, 17);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.normal();
    auto project = [&](Eigen::VectorXd& v) {
        if (deflate) v -= deflate->dot(v) * (*deflate);
        const double norm = v.norm();
        if (norm == 0) throw std::runtime_error("inverse iteration: degenerate iterate");
        v /= norm;
    };
    project(x);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd y = solver.solve(x);
        project(y);
        x = y;
        const double q = x.dot(A * x);
        if (std::abs(q - prev) <= 1e-12 * std::max(std::abs(q), 1e-30)) break;
        prev = q;
    }
    if (out) *out = x;
    return x.dot(A * x);
}

std::pair<double, Eigen::VectorXd> smallest_pair(const SymOp& op, int dense_cap) {
    const int m = static_cast<int>(op.A.rows());
    if (m <= dense_cap) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(op.A));
        return {es.eigenvalues()[0], es.eigenvectors().col(0)};
    }
    Eigen::VectorXd v;
    double q = inverse_iteration(op.A, nullptr, &v);
    return {q, v};
}

std::vector<double> qs_from_vector(const SymOp& op, Eigen::VectorXd v, int full_size) {
    double signsum = 0;
    for (int r = 0; r < v.size(); ++r) signsum += op.sqrt_mu[r] * v[r];
    if (signsum < 0) v = -v;
    std::vector<double> qs(full_size, 0.0);
    double total = 0;
    for (int r = 0; r < v.size(); ++r) {
        const double w = std::max(0.0, op.sqrt_mu[r] * v[r]);
        qs[op.states[r]] = w;
        total += w;
    }
    if (!(total > 0)) throw std::runtime_error("extinction_rate: degenerate eigenvector");
    for (double& w : qs) w /= total;
    return qs;
}

} // namespace

double spectral_gap(const ChainModel& chain, int dense_cap) {
    if (chain.size() < 2) throw std::invalid_argument("spectral_gap: chain has a single state");
    if (!chain.connected()) throw std::runtime_error("spectral_gap: reducible chain");
    SymOp op = build_sym(chain, nullptr, nullptr);
    if (chain.size() <= dense_cap) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(op.A),
                                                          Eigen::EigenvaluesOnly);
        return std::max(0.0, es.eigenvalues()[1]);
    }
    Eigen::VectorXd v0 = op.sqrt_mu; // exact kernel of the symmetrized operator
    v0.normalize();
    return std::max(0.0, inverse_iteration(op.A, &v0, nullptr));
}

double dirichlet_form(const ChainModel& chain, const std::vector<double>& f) {
    if (static_cast<int>(f.size()) != chain.size())
        throw std::invalid_argument("dirichlet_form: f size mismatch");
    double d = 0;
    for (const auto& e : chain.edges()) {
        const double df = f[e.i] - f[e.j];
        d += e.c * df * df;
    }
    return d;
}

double mu_variance(const ChainModel& chain, const std::vector<double>& f) {
    if (static_cast<int>(f.size()) != chain.size())
        throw std::invalid_argument("mu_variance: f size mismatch");
    double mean = 0, second = 0;
    for (int i = 0; i < chain.size(); ++i) {
        mean += chain.mu()[i] * f[i];
        second += chain.mu()[i] * f[i] * f[i];
    }
    return std::max(0.0, second - mean * mean);
}

ExtinctionResult extinction_rate(const ChainModel& chain, const std::vector<std::uint8_t>& killed,
                                 double rate) {
    check_mask(chain, killed, "extinction_rate");
    int inside = 0;
    for (auto m : killed) inside += m ? 1 : 0;
    if (inside == 0 || inside == chain.size())
        throw std::invalid_argument("extinction_rate: killed region empty or full");
    if (std::isnan(rate) || rate < 0)
        throw std::invalid_argument("extinction_rate: rate must be nonnegative");
    if (rate == 0) return {0.0, chain.mu()};

    if (std::isinf(rate)) {
        std::vector<std::uint8_t> keep = mask_not(killed);
        SymOp op = build_sym(chain, nullptr, &keep);
        auto [phi, v] = smallest_pair(op, 2000);
        return {std::max(0.0, phi), qs_from_vector(op, std::move(v), chain.size())};
    }
    std::vector<double> kill(chain.size(), 0.0);
    for (int i = 0; i < chain.size(); ++i)
        if (killed[i]) kill[i] = rate;
    SymOp op = build_sym(chain, &kill, nullptr);
    auto [phi, v] = smallest_pair(op, 2000);
    return {std::max(0.0, phi), qs_from_vector(op, std::move(v), chain.size())};
}

double survival_probability(const ChainModel& chain, const std::vector<std::uint8_t>& killed,
                            double rate, const std::vector<double>& initial, double s) {
    check_mask(chain, killed, "survival_probability");
    if (chain.size() > 2000)
        throw std::length_error("survival_probability: past the dense-exponential cap");
    if (static_cast<int>(initial.size()) != chain.size())
        throw std::invalid_argument("survival_probability: initial law size mismatch");
    double total = 0;
    for (double w : initial) {
        if (w < -1e-12) throw std::invalid_argument("survival_probability: negative initial mass");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("survival_probability: initial law does not sum to one");
    if (s < 0) throw std::invalid_argument("survival_probability: negative time");
    if (std::isnan(rate) || rate < 0)
        throw std::invalid_argument("survival_probability: rate must be nonnegative");
    if (rate == 0) return 1.0;

    SymOp op;
    if (std::isinf(rate)) {
        std::vector<std::uint8_t> keep = mask_not(killed);
        op = build_sym(chain, nullptr, &keep);
    } else {
        std::vector<double> kill(chain.size(), 0.0);
        for (int i = 0; i < chain.size(); ++i)
            if (killed[i]) kill[i] = rate;
        op = build_sym(chain, &kill, nullptr);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((Eigen::MatrixXd(op.A)));
    const int m = static_cast<int>(op.states.size());
    Eigen::VectorXd nu(m);
    for (int r = 0; r < m; ++r) nu[r] = initial[op.states[r]] / op.sqrt_mu[r];
    Eigen::VectorXd ones(m);
    for (int r = 0; r < m; ++r) ones[r] = op.sqrt_mu[r];
    const Eigen::VectorXd a = es.eigenvectors().transpose() * nu;
    const Eigen::VectorXd b = es.eigenvectors().transpose() * ones;
    double p = 0;
    for (int k = 0; k < m; ++k) p += std::exp(-s * es.eigenvalues()[k]) * a[k] * b[k];
    return p;
}

double mean_exit_bound(const ChainModel& chain, const std::vector<std::uint8_t>& region,
                       const std::vector<std::uint8_t>& target) {
    check_mask(chain, region, "mean_exit_bound");
    check_mask(chain, target, "mean_exit_bound");
    const double mass = chain.mass(region);
    if (!(mass > 0)) throw std::invalid_argument("mean_exit_bound: empty region");
    double acc = 0;
    for (int i = 0; i < chain.size(); ++i) {
        if (!region[i]) continue;
        for (const auto& [j, c] : chain.adjacency()[i])
            if (target[j]) acc += c; // mu(i) w(i,j)
    }
    return acc / mass;
}

CapacityResult soft_capacity(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                             const std::vector<std::uint8_t>& S, double kappa, double lambda) {
    const int n = chain.size();
    check_mask(chain, R, "soft_capacity");
    check_mask(chain, S, "soft_capacity");
    if (std::count(R.begin(), R.end(), 0) == n || std::count(S.begin(), S.end(), 0) == n)
        throw std::invalid_argument("soft_capacity: R and S must be nonempty");
    if (std::isnan(kappa) || std::isnan(lambda) || kappa < 0 || lambda < 0)
        throw std::invalid_argument("soft_capacity: rates must be nonnegative");
    if (kappa == 0 && lambda == 0)
        throw std::invalid_argument("soft_capacity: kappa = lambda = 0 is singular");
    const bool pin1 = std::isinf(kappa);
    const bool pin0 = std::isinf(lambda);

    std::vector<int> local(n, -1);
    std::vector<double> pinned(n, 0.0);
    std::vector<std::uint8_t> is_pinned(n, 0);
    std::vector<int> free_states;
    for (int i = 0; i < n; ++i) {
        const bool one = pin1 && R[i];
        const bool zero = pin0 && S[i];
        if (one && zero)
            throw std::invalid_argument("soft_capacity: R and S overlap with absorbing rates");
        if (one || zero) {
            is_pinned[i] = 1;
            pinned[i] = one ? 1.0 : 0.0;
        } else {
            local[i] = static_cast<int>(free_states.size());
            free_states.push_back(i);
        }
    }
    const int m = static_cast<int>(free_states.size());

    Eigen::VectorXd diag(m), b(m);
    for (int r = 0; r < m; ++r) {
        const int i = free_states[r];
        double d = 0, rhs = 0;
        for (const auto& [j, c] : chain.adjacency()[i]) {
            d += c;
            if (is_pinned[j]) rhs += c * pinned[j];
        }
        if (!pin1 && R[i]) {
            d += kappa * chain.mu()[i];
            rhs += kappa * chain.mu()[i];
        }
        if (!pin0 && S[i]) d += lambda * chain.mu()[i];
        diag[r] = d;
        b[r] = rhs;
    }

    auto apply = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(m);
        for (int r = 0; r < m; ++r) {
            const int i = free_states[r];
            double acc = diag[r] * x[r];
            for (const auto& [j, c] : chain.adjacency()[i])
                if (local[j] >= 0) acc -= c * x[local[j]];
            y[r] = acc;
        }
        return y;
    };

    Eigen::VectorXd f_free = Eigen::VectorXd::Zero(m);
    if (m > 0 && b.norm() > 0) {
        // Jacobi-preconditioned conjugate gradients, dense fallback
        const double target = 1e-12 * b.norm();
        Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd r = b;
        Eigen::VectorXd z = r.cwiseQuotient(diag);
        Eigen::VectorXd p = z;
        double rz = r.dot(z);
        bool ok = false;
        const int max_iter = 20 * m + 200;
        for (int it = 0; it < max_iter; ++it) {
            if (r.norm() <= target) {
                ok = true;
                break;
            }
            const Eigen::VectorXd Ap = apply(p);
            const double denom = p.dot(Ap);
            if (!(denom > 0)) break; // lost positivity, fall back
            const double alpha = rz / denom;
            x += alpha * p;
            r -= alpha * Ap;
            z = r.cwiseQuotient(diag);
            const double rz_next = r.dot(z);
            p = z + (rz_next / rz) * p;
            rz = rz_next;
        }
        if (!ok && r.norm() > target) {
            if (m > 8000) throw std::runtime_error("soft_capacity: solver failed to converge");
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
            for (int r2 = 0; r2 < m; ++r2) {
                const int i = free_states[r2];
                M(r2, r2) = diag[r2];
                for (const auto& [j, c] : chain.adjacency()[i])
                    if (local[j] >= 0) M(r2, local[j]) -= c;
            }
            x = M.ldlt().solve(b);
        }
        f_free = x;
    }

    CapacityResult out;
    out.f.assign(n, 0.0);
    for (int i = 0; i < n; ++i) out.f[i] = is_pinned[i] ? pinned[i] : f_free[local[i]];
    double value = dirichlet_form(chain, out.f);
    if (!pin1)
        for (int i = 0; i < n; ++i)
            if (R[i]) value += kappa * chain.mu()[i] * (out.f[i] - 1.0) * (out.f[i] - 1.0);
    if (!pin0)
        for (int i = 0; i < n; ++i)
            if (S[i]) value += lambda * chain.mu()[i] * out.f[i] * out.f[i];
    out.value = value;
    return out;
}

void validate_unit_flow(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                        const std::vector<std::uint8_t>& S, const Flow& flow, double tol) {
    const int n = chain.size();
    check_mask(chain, R, "validate_unit_flow");
    check_mask(chain, S, "validate_unit_flow");
    if (flow.edge.size() != chain.edges().size() || static_cast<int>(flow.source.size()) != n ||
        static_cast<int>(flow.sink.size()) != n)
        throw std::invalid_argument("validate_unit_flow: flow shape mismatch");
    double in = 0, out = 0;
    std::vector<double> div(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (flow.source[i] < -tol || (!R[i] && std::abs(flow.source[i]) > tol))
            throw std::invalid_argument("validate_unit_flow: source off R or negative");
        if (flow.sink[i] < -tol || (!S[i] && std::abs(flow.sink[i]) > tol))
            throw std::invalid_argument("validate_unit_flow: sink off S or negative");
        in += flow.source[i];
        out += flow.sink[i];
        div[i] = flow.sink[i] - flow.source[i];
    }
    if (std::abs(in - 1.0) > tol || std::abs(out - 1.0) > tol)
        throw std::invalid_argument("validate_unit_flow: flow is not unitary");
    for (size_t k = 0; k < chain.edges().size(); ++k) {
        const auto& e = chain.edges()[k];
        div[e.i] += flow.edge[k];
        div[e.j] -= flow.edge[k];
    }
    for (int i = 0; i < n; ++i)
        if (std::abs(div[i]) > tol)
            throw std::invalid_argument("validate_unit_flow: divergence at an interior state");
}

double thomson_value(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                     const std::vector<std::uint8_t>& S, double kappa, double lambda,
                     const Flow& flow) {
    validate_unit_flow(chain, R, S, flow);
    if (std::isnan(kappa) || std::isnan(lambda) || kappa < 0 || lambda < 0)
        throw std::invalid_argument("thomson_value: rates must be nonnegative");
    double d = 0;
    for (size_t k = 0; k < chain.edges().size(); ++k)
        d += flow.edge[k] * flow.edge[k] / chain.edges()[k].c;
    for (int i = 0; i < chain.size(); ++i) {
        if (!std::isinf(kappa) && flow.source[i] != 0) {
            if (kappa == 0) return 0.0; // infinite dissipation at the bar node
            d += flow.source[i] * flow.source[i] / (chain.mu()[i] * kappa);
        }
        if (!std::isinf(lambda) && flow.sink[i] != 0) {
            if (lambda == 0) return 0.0;
            d += flow.sink[i] * flow.sink[i] / (chain.mu()[i] * lambda);
        }
    }
    return d > 0 ? 1.0 / d : std::numeric_limits<double>::infinity();
}

Flow harmonic_flow(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                   const std::vector<std::uint8_t>& S, double kappa, double lambda) {
    CapacityResult cap = soft_capacity(chain, R, S, kappa, lambda);
    if (!(cap.value > 0)) throw std::runtime_error("harmonic_flow: zero capacity");
    const int n = chain.size();
    Flow fl;
    fl.edge.assign(chain.edges().size(), 0.0);
    fl.source.assign(n, 0.0);
    fl.sink.assign(n, 0.0);
    std::vector<double> net(n, 0.0); // divergence of the edge part
    for (size_t k = 0; k < chain.edges().size(); ++k) {
        const auto& e = chain.edges()[k];
        fl.edge[k] = e.c * (cap.f[e.i] - cap.f[e.j]) / cap.value;
        net[e.i] += fl.edge[k];
        net[e.j] -= fl.edge[k];
    }
    for (int i = 0; i < n; ++i)
        if (S[i] && !std::isinf(lambda)) fl.sink[i] = lambda * chain.mu()[i] * cap.f[i] / cap.value;
    for (int i = 0; i < n; ++i) {
        if (!R[i]) continue;
        fl.source[i] = std::isinf(kappa) ? net[i] + fl.sink[i]
                                         : kappa * chain.mu()[i] * (1.0 - cap.f[i]) / cap.value;
    }
    if (std::isinf(lambda))
        for (int i = 0; i < n; ++i)
            if (S[i]) fl.sink[i] = fl.source[i] - net[i];
    return fl;
}

double mixing_time(const ChainModel& chain, double epsilon) {
    const int n = chain.size();
    if (n > 2000) throw std::length_error("mixing_time: past the dense-exponential cap");
    if (!(epsilon > 0) || epsilon >= 1) throw std::invalid_argument("mixing_time: bad epsilon");
    if (n == 1) return 0.0;

    SymOp op = build_sym(chain, nullptr, nullptr);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((Eigen::MatrixXd(op.A)));
    const Eigen::MatrixXd& U = es.eigenvectors();
    const Eigen::VectorXd& ev = es.eigenvalues();

    auto worst_tv = [&](double t) {
        Eigen::MatrixXd scaled = U;
        for (int k = 0; k < n; ++k) scaled.col(k) *= std::exp(-t * ev[k]);
        Eigen::MatrixXd m = scaled * U.transpose();
        double worst = 0;
        for (int i = 0; i < n; ++i) {
            double tv = 0;
            for (int j = 0; j < n; ++j) {
                const double pij = m(i, j) * op.sqrt_mu[j] / op.sqrt_mu[i];
                tv += std::abs(pij - chain.mu()[j]);
            }
            worst = std::max(worst, 0.5 * tv);
        }
        return worst;
    };

    if (worst_tv(0.0) <= epsilon) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (worst_tv(hi) > epsilon) {
        hi *= 2;
        if (++guard > 100) throw std::runtime_error("mixing_time: no mixing (reducible chain?)");
    }
    double lo = hi / 2;
    if (guard == 0) lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (worst_tv(mid) <= epsilon ? hi : lo) = mid;
    }
    return hi;
}

double chi_max(const ChainModel& chain, const std::vector<std::uint8_t>& region) {
    check_mask(chain, region, "chi_max");
    const double mass = chain.mass(region);
    if (!(mass > 0)) throw std::invalid_argument("chi_max: empty region");
    double min_mu = std::numeric_limits<double>::infinity();
    for (int i = 0; i < chain.size(); ++i)
        if (region[i]) min_mu = std::min(min_mu, chain.mu()[i]);
    return mass / min_mu;
}

} // namespace ilab

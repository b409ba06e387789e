#include "ahsse/qme.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace ahsse {

namespace {
constexpr Complex kI{0.0, 1.0};
}

void BlockDensityMatrix::hermitize() {
    rho00 = 0.5 * (rho00 + rho00.adjoint().eval());
    rho11 = 0.5 * (rho11 + rho11.adjoint().eval());
    rho01 = 0.5 * (rho01 + rho10.adjoint().eval());
    rho10 = rho01.adjoint();
}

double BlockDensityMatrix::trace(double dx) const {
    return (rho00.trace() + rho11.trace()).real() * dx;
}

double BlockDensityMatrix::purity(double dx) const {
    // tr(rho^2) of the full two-block operator, dx^2 quadrature weight.
    const double diag = (rho00 * rho00 + rho11 * rho11).trace().real();
    const double off = 2.0 * (rho01 * rho10).trace().real();
    return (diag + off) * dx * dx;
}

BlockDensityMatrix BlockDensityMatrix::zero(int m) {
    BlockDensityMatrix rho;
    rho.rho00 = Eigen::MatrixXcd::Zero(m, m);
    rho.rho01 = Eigen::MatrixXcd::Zero(m, m);
    rho.rho10 = Eigen::MatrixXcd::Zero(m, m);
    rho.rho11 = Eigen::MatrixXcd::Zero(m, m);
    return rho;
}

std::pair<double, double> populations_from_density(const BlockDensityMatrix& rho, double dx) {
    return {rho.rho00.trace().real() * dx, rho.rho11.trace().real() * dx};
}

Eigen::MatrixXcd build_hamiltonian(const SpatialGrid& grid, const Eigen::VectorXd& potential,
                                   double epsilon) {
    if (potential.size() != grid.m) throw ConfigError("potential size does not match grid");
    const int m = grid.m;
    // Plane-wave basis phi_l(x_j) = exp(i mu_l x_j)/sqrt(m), the eigenbasis of
    // the spectral kinetic operator used by the split-step propagator.
    Eigen::MatrixXcd p(m, m);
    for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l)
            p(j, l) = std::exp(kI * grid.wavenumbers[l] * grid.points[j]) / std::sqrt(double(m));
    Eigen::VectorXd kin = 0.5 * epsilon * epsilon * grid.wavenumbers.array().square();
    Eigen::MatrixXcd h = p * kin.asDiagonal() * p.adjoint();
    h += potential.asDiagonal();
    return 0.5 * (h + h.adjoint().eval());
}

namespace {

// I^∓(E_n) = int_0^T c^∓(tau) exp(-i E_n tau / eps) dtau with the tau integral
// folded analytically into the band-energy integral:
//   I^-(E_n) = int f^-(E) phi(E - E_n) dE,  I^+(E_n) = int f^+(E) phi(-(E + E_n)) dE,
//   phi(D) = eps (exp(i D T / eps) - 1) / (i D), phi(0) = T.
Eigen::VectorXcd horizon_integrals(KernelSign sign, const Eigen::VectorXd& energies,
                                   const BathSpec& spec, double horizon) {
    const double periods = (spec.e_plus - spec.e_minus) * horizon /
                           (2.0 * std::numbers::pi * spec.epsilon);
    const int n = std::max(spec.quadrature_points, static_cast<int>(std::ceil(10.0 * periods)));
    if (n > 2'000'000)
        throw InsufficientQuadrature("dissipator horizon integral needs " + std::to_string(n) +
                                     " quadrature nodes");
    const auto& rule = gauss_legendre_rule(n);
    const double half = 0.5 * (spec.e_plus - spec.e_minus);
    const double mid = 0.5 * (spec.e_plus + spec.e_minus);
    auto phi = [&](double d) -> Complex {
        if (std::abs(d) * horizon < 1e-14 * spec.epsilon) return horizon;
        return spec.epsilon * (std::exp(kI * d * horizon / spec.epsilon) - 1.0) / (kI * d);
    };
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(energies.size());
    for (int i = 0; i < n; ++i) {
        const double e = mid + half * rule.nodes[i];
        const double f = (sign == KernelSign::Plus) ? fermi_weight_plus(e, spec.beta, spec.mu)
                                                    : fermi_weight_minus(e, spec.beta, spec.mu);
        const double w = half * rule.weights[i] * f;
        for (Eigen::Index k = 0; k < energies.size(); ++k) {
            const double d = (sign == KernelSign::Plus) ? -(e + energies[k]) : (e - energies[k]);
            out[k] += w * phi(d);
        }
    }
    return out;
}

Eigen::MatrixXcd assemble_lambda(const Eigen::MatrixXcd& h, const Eigen::VectorXd& v,
                                 KernelSign sign, const BathSpec& spec, double horizon,
                                 bool redfield, double tol, Complex& gamma_out) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalBlowup("Hamiltonian diagonalization failed", 0);
    Eigen::VectorXcd integrals = horizon_integrals(sign, es.eigenvalues(), spec, horizon);
    Eigen::VectorXcd gamma_scalar =
        horizon_integrals(sign, Eigen::VectorXd::Zero(1), spec, horizon);
    if (redfield) {
        Eigen::VectorXcd fine = horizon_integrals(sign, es.eigenvalues(), spec, 2.0 * horizon);
        const double err = (fine - integrals).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, fine.cwiseAbs().maxCoeff());
        if (err > tol * scale)
            throw HorizonNotConverged("Redfield horizon tail estimate " + std::to_string(err) +
                                      " above tolerance " + std::to_string(tol * scale));
        integrals = fine;
        gamma_scalar = horizon_integrals(sign, Eigen::VectorXd::Zero(1), spec, 2.0 * horizon);
    }
    gamma_out = gamma_scalar[0];
    Eigen::MatrixXcd core =
        es.eigenvectors() * integrals.asDiagonal() * es.eigenvectors().adjoint();
    return v.asDiagonal() * core * v.asDiagonal();
}

}  // namespace

DissipatorCoefficients dissipator_coefficients(const BathSpec& spec, const Eigen::MatrixXcd& h0,
                                               const Eigen::MatrixXcd& h1,
                                               const Eigen::VectorXd& v, double horizon,
                                               bool redfield, double tol) {
    spec.validate();
    if (h0.rows() != h0.cols() || h1.rows() != h1.cols() || h0.rows() != h1.rows() ||
        v.size() != h0.rows()) {
        throw ConfigError("dissipator_coefficients: dimension mismatch");
    }
    if (horizon < 0.0) throw ConfigError("dissipator_coefficients: horizon must be >= 0");
    DissipatorCoefficients out;
    out.horizon = horizon;
    if (horizon == 0.0) {
        out.lambda_plus = Eigen::MatrixXcd::Zero(h0.rows(), h0.cols());
        out.lambda_minus = Eigen::MatrixXcd::Zero(h0.rows(), h0.cols());
        return out;
    }
    // Lambda^- pairs c^- with the h1 propagator; Lambda^+ pairs c^+ with h0.
    out.lambda_minus =
        assemble_lambda(h1, v, KernelSign::Minus, spec, horizon, redfield, tol, out.gamma_minus);
    out.lambda_plus =
        assemble_lambda(h0, v, KernelSign::Plus, spec, horizon, redfield, tol, out.gamma_plus);
    if (!out.lambda_plus.allFinite() || !out.lambda_minus.allFinite())
        throw NumericalBlowup("dissipator coefficients are not finite", 0);
    return out;
}

DissipatorCoefficients dissipator_coefficients_delta(Complex c0_plus, Complex c0_minus,
                                                     const Eigen::VectorXd& v) {
    DissipatorCoefficients out;
    Eigen::VectorXd vsq = v.array().square();
    out.lambda_plus = (c0_plus * vsq).asDiagonal();
    out.lambda_minus = (c0_minus * vsq).asDiagonal();
    out.gamma_plus = 0.5 * c0_plus;
    out.gamma_minus = 0.5 * c0_minus;
    out.horizon = 0.0;
    return out;
}

BlockDensityMatrix qme_rhs_markovian(const BlockDensityMatrix& rho, const Eigen::MatrixXcd& h0,
                                     const Eigen::MatrixXcd& h1, const Eigen::VectorXd& v,
                                     double coeff, double epsilon) {
    const Eigen::Index m = rho.rho00.rows();
    if (h0.rows() != m || h1.rows() != m || v.size() != m)
        throw ConfigError("qme_rhs_markovian: dimension mismatch");
    const Complex c = -kI / epsilon;
    BlockDensityMatrix d;
    d.rho00 = c * (h0 * rho.rho00 - rho.rho00 * h0);
    d.rho01 = c * (h0 * rho.rho01 - rho.rho01 * h1);
    d.rho10 = c * (h1 * rho.rho10 - rho.rho10 * h0);
    d.rho11 = c * (h1 * rho.rho11 - rho.rho11 * h1);

    const auto vd = v.asDiagonal();
    const Eigen::MatrixXcd pop = vd * (rho.rho00 - rho.rho11) * vd;
    const Eigen::MatrixXcd coh = vd * (rho.rho01 + rho.rho10) * vd;
    d.rho00 -= coeff * 2.0 * pop;
    d.rho11 += coeff * 2.0 * pop;
    d.rho01 -= coeff * coh;
    d.rho10 -= coeff * coh;
    d.time = 1.0;
    return d;
}

BlockDensityMatrix qme_rhs_history(const BlockDensityMatrix& rho, const Eigen::MatrixXcd& h0,
                                   const Eigen::MatrixXcd& h1, const Eigen::VectorXd& v,
                                   const DissipatorCoefficients& coeffs, double gamma,
                                   double epsilon) {
    const Eigen::Index m = rho.rho00.rows();
    if (h0.rows() != m || h1.rows() != m || v.size() != m || coeffs.lambda_plus.rows() != m)
        throw ConfigError("qme_rhs_history: dimension mismatch");
    const Complex c = -kI / epsilon;
    const auto vd = v.asDiagonal();
    const Eigen::MatrixXcd& lm = coeffs.lambda_minus;
    const Eigen::MatrixXcd& lp = coeffs.lambda_plus;

    BlockDensityMatrix d;
    d.rho00 = c * (h0 * rho.rho00 - rho.rho00 * h0) +
              gamma * (lm * rho.rho00 + rho.rho00 * lm.adjoint() +
                       (2.0 * coeffs.gamma_plus.real()) * (vd * rho.rho11 * vd));
    d.rho11 = c * (h1 * rho.rho11 - rho.rho11 * h1) +
              gamma * (lp * rho.rho11 + rho.rho11 * lp.adjoint() +
                       (2.0 * coeffs.gamma_minus.real()) * (vd * rho.rho00 * vd));
    d.rho01 = c * (h0 * rho.rho01 - rho.rho01 * h1) +
              gamma * (lm * rho.rho01 + rho.rho01 * lp.adjoint());
    d.rho10 = d.rho01.adjoint();
    d.time = 1.0;
    return d;
}

namespace {

BlockDensityMatrix axpy(const BlockDensityMatrix& x, double a, const BlockDensityMatrix& y) {
    BlockDensityMatrix out;
    out.rho00 = x.rho00 + a * y.rho00;
    out.rho01 = x.rho01 + a * y.rho01;
    out.rho10 = x.rho10 + a * y.rho10;
    out.rho11 = x.rho11 + a * y.rho11;
    out.time = x.time + a * y.time;
    return out;
}

}  // namespace

std::vector<BlockDensityMatrix> integrate_qme(const BlockDensityMatrix& rho0, const QmeRhs& rhs,
                                              double dt, double t_final, int sample_stride) {
    if (!(dt > 0.0)) throw ConfigError("integrate_qme: dt must be positive");
    if (sample_stride < 1) throw ConfigError("integrate_qme: sample stride must be >= 1");
    const long n_steps = std::llround(t_final / dt);

    std::vector<BlockDensityMatrix> series;
    BlockDensityMatrix rho = rho0;
    series.push_back(rho);
    for (long n = 0; n < n_steps; ++n) {
        const BlockDensityMatrix k1 = rhs(rho);
        const BlockDensityMatrix k2 = rhs(axpy(rho, 0.5 * dt, k1));
        const BlockDensityMatrix k3 = rhs(axpy(rho, 0.5 * dt, k2));
        const BlockDensityMatrix k4 = rhs(axpy(rho, dt, k3));
        rho = axpy(rho, dt / 6.0, axpy(k1, 1.0, axpy(k4, 2.0, axpy(k2, 1.0, k3))));
        rho.hermitize();
        if (!rho.rho00.allFinite() || !rho.rho01.allFinite() || !rho.rho11.allFinite())
            throw NumericalBlowup("density matrix is not finite", n);
        if ((n + 1) % sample_stride == 0 || n + 1 == n_steps) series.push_back(rho);
    }
    return series;
}

EnsembleDensity ensemble_density(const std::vector<SpinorState>& states, const SpatialGrid& grid) {
    if (states.empty()) throw ConfigError("ensemble_density: empty trajectory list");
    const int m = grid.m;
    EnsembleDensity out;
    out.raw = BlockDensityMatrix::zero(m);
    out.normalized = BlockDensityMatrix::zero(m);
    const double t0 = states.front().time;
    for (const SpinorState& s : states) {
        if (s.psi0.size() != m || s.psi1.size() != m)
            throw ConfigError("ensemble_density: state size does not match grid");
        if (std::abs(s.time - t0) > 1e-9)
            throw ConfigError("ensemble_density: trajectory snapshots at different times");
        out.raw.rho00 += s.psi0 * s.psi0.adjoint();
        out.raw.rho01 += s.psi0 * s.psi1.adjoint();
        out.raw.rho11 += s.psi1 * s.psi1.adjoint();
        const double nrm = total_norm_sq(s, grid);
        if (!(nrm > 0.0)) throw NumericalBlowup("zero-norm trajectory state", 0);
        out.normalized.rho00 += s.psi0 * s.psi0.adjoint() / nrm;
        out.normalized.rho01 += s.psi0 * s.psi1.adjoint() / nrm;
        out.normalized.rho11 += s.psi1 * s.psi1.adjoint() / nrm;
    }
    const double scale = 1.0 / static_cast<double>(states.size());
    for (BlockDensityMatrix* rho : {&out.raw, &out.normalized}) {
        rho->rho00 *= scale;
        rho->rho01 *= scale;
        rho->rho11 *= scale;
        rho->rho10 = rho->rho01.adjoint();
        rho->time = t0;
    }
    return out;
}

void write_qme_csv(const std::vector<BlockDensityMatrix>& series, double dx,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "t,P0,P1,trace,purity\n";
    out.precision(15);
    for (const BlockDensityMatrix& rho : series) {
        const auto [p0, p1] = populations_from_density(rho, dx);
        out << rho.time << ',' << p0 << ',' << p1 << ',' << rho.trace(dx) << ','
            << rho.purity(dx) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace ahsse

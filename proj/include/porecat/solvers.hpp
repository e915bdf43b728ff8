#pragma once

#include <memory>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "porecat/errors.hpp"

namespace porecat {

enum class KrylovMethod { cg, bicgstab };
enum class Preconditioner { none, jacobi };

struct LinearSolverConfig {
    KrylovMethod method = KrylovMethod::cg;
    double rel_tol = 1e-10;
    int max_iter = 10000;
    Preconditioner preconditioner = Preconditioner::jacobi;

    void validate() const {
        PORECAT_REQUIRE(rel_tol > 0.0, ConfigError, "solver: rel_tol must be > 0");
        PORECAT_REQUIRE(max_iter > 0, ConfigError, "solver: max_iter must be > 0");
    }
};

inline KrylovMethod parse_krylov_method(const std::string& s) {
    if (s == "cg") return KrylovMethod::cg;
    if (s == "bicgstab") return KrylovMethod::bicgstab;
    throw ConfigError("unknown solver method '" + s + "' (expected cg | bicgstab)");
}

inline Preconditioner parse_preconditioner(const std::string& s) {
    if (s == "none") return Preconditioner::none;
    if (s == "jacobi") return Preconditioner::jacobi;
    throw ConfigError("unknown preconditioner '" + s + "' (expected none | jacobi)");
}

/// A Krylov solver bound to one matrix. Throws SolverError when the
/// iteration cap is hit or the result is not finite.
class KrylovSolver {
public:
    using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    KrylovSolver(Matrix a, LinearSolverConfig cfg) : a_(std::move(a)), cfg_(cfg) {
        cfg_.validate();
        switch (kind()) {
        case 0: cg_j_ = std::make_unique<CgJ>(); setup(*cg_j_); break;
        case 1: cg_n_ = std::make_unique<CgN>(); setup(*cg_n_); break;
        case 2: bi_j_ = std::make_unique<BiJ>(); setup(*bi_j_); break;
        default: bi_n_ = std::make_unique<BiN>(); setup(*bi_n_); break;
        }
    }

    const Matrix& matrix() const { return a_; }
    int last_iterations() const { return iterations_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd& guess) {
        if (b.size() == 0) return b;
        switch (kind()) {
        case 0: return run(*cg_j_, b, guess);
        case 1: return run(*cg_n_, b, guess);
        case 2: return run(*bi_j_, b, guess);
        default: return run(*bi_n_, b, guess);
        }
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) { return solve(b, Eigen::VectorXd::Zero(b.size())); }

    /// Like solve, but returns the last iterate when the tolerance is not
    /// reached. Non-finite results still throw.
    Eigen::VectorXd solve_best_effort(const Eigen::VectorXd& b) {
        strict_ = false;
        try {
            Eigen::VectorXd x = solve(b);
            strict_ = true;
            return x;
        } catch (...) {
            strict_ = true;
            throw;
        }
    }

private:
    using CgJ = Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>;
    using CgN = Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner>;
    using BiJ = Eigen::BiCGSTAB<Matrix, Eigen::DiagonalPreconditioner<double>>;
    using BiN = Eigen::BiCGSTAB<Matrix, Eigen::IdentityPreconditioner>;

    int kind() const {
        return (cfg_.method == KrylovMethod::cg ? 0 : 2) + (cfg_.preconditioner == Preconditioner::jacobi ? 0 : 1);
    }

    template <class S>
    void setup(S& s) {
        s.setTolerance(cfg_.rel_tol);
        s.setMaxIterations(cfg_.max_iter);
        s.compute(a_);
    }

    template <class S>
    Eigen::VectorXd run(S& s, const Eigen::VectorXd& b, const Eigen::VectorXd& guess) {
        if (b.isZero(0.0)) {
            iterations_ = 0;
            return Eigen::VectorXd::Zero(b.size());
        }
        Eigen::VectorXd x = s.solveWithGuess(b, guess);
        iterations_ = static_cast<int>(s.iterations());
        if (strict_ && s.info() != Eigen::Success)
            throw SolverError("linear solver did not converge in " + std::to_string(cfg_.max_iter) +
                              " iterations (estimated relative residual " + std::to_string(s.error()) + ")");
        if (!x.allFinite()) throw SolverError("linear solver produced non-finite values");
        return x;
    }

    Matrix a_;
    LinearSolverConfig cfg_;
    std::unique_ptr<CgJ> cg_j_;
    std::unique_ptr<CgN> cg_n_;
    std::unique_ptr<BiJ> bi_j_;
    std::unique_ptr<BiN> bi_n_;
    int iterations_ = 0;
    bool strict_ = true;
};

} // namespace porecat

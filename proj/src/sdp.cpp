#include "mocp/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace mocp {

ConicProgram::ConicProgram(int num_vars) : num_vars_(num_vars) {
    if (num_vars < 0) throw std::invalid_argument("ConicProgram: negative variable count");
    c_ = Eigen::VectorXd::Zero(num_vars);
}

void ConicProgram::set_objective(int var, double coef) {
    if (var < 0 || var >= num_vars_) throw std::out_of_range("set_objective: bad variable");
    c_(var) = coef;
}

int ConicProgram::add_equality(const std::vector<std::pair<int, double>>& row, double rhs) {
    for (const auto& [var, coef] : row)
        if (var < 0 || var >= num_vars_) throw std::out_of_range("add_equality: bad variable");
    erows_.push_back(row);
    rhs_.push_back(rhs);
    return static_cast<int>(rhs_.size()) - 1;
}

Eigen::SparseMatrix<double> ConicProgram::equality_matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < erows_.size(); ++r)
        for (const auto& [var, coef] : erows_[r])
            trip.emplace_back(static_cast<int>(r), var, coef);
    Eigen::SparseMatrix<double> E(static_cast<int>(erows_.size()), num_vars_);
    E.setFromTriplets(trip.begin(), trip.end());  // duplicate triplets are summed
    return E;
}

int ConicProgram::add_block(int size) {
    if (size <= 0) throw std::invalid_argument("add_block: size must be positive");
    blocks_.push_back(Block{size, {}, {}});
    return static_cast<int>(blocks_.size()) - 1;
}

void ConicProgram::add_block_entry(int block, int var, int row, int col, double value) {
    if (block < 0 || block >= num_blocks()) throw std::out_of_range("add_block_entry: bad block");
    Block& b = blocks_[block];
    if (row < 0 || col < 0 || row >= b.size || col >= b.size)
        throw std::out_of_range("add_block_entry: bad position");
    if (var < -1 || var >= num_vars_) throw std::out_of_range("add_block_entry: bad variable");
    if (value == 0.0) return;
    if (row > col) std::swap(row, col);
    if (var == -1)
        b.f0.push_back({row, col, value});
    else
        b.coeffs[var].push_back({row, col, value});
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::numerical: return "numerical";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Entry {
    int row, col;
    double value;
};

// Coalesced per-block data with dense F0 and the touching-variable lists.
struct BlockData {
    int size;
    MatrixXd F0;
    std::vector<int> vars;
    std::vector<std::vector<Entry>> F;  // parallel to vars
};

std::vector<Entry> coalesce(const std::vector<ConicProgram::Entry>& raw) {
    std::map<std::pair<int, int>, double> acc;
    for (const auto& e : raw) acc[{e.row, e.col}] += e.value;
    std::vector<Entry> out;
    out.reserve(acc.size());
    for (const auto& [pos, v] : acc)
        if (v != 0.0) out.push_back({pos.first, pos.second, v});
    return out;
}

void add_scaled(MatrixXd& M, const std::vector<Entry>& F, double s) {
    for (const auto& e : F) {
        M(e.row, e.col) += s * e.value;
        if (e.row != e.col) M(e.col, e.row) += s * e.value;
    }
}

double inner(const std::vector<Entry>& F, const MatrixXd& M) {
    double acc = 0.0;
    for (const auto& e : F)
        acc += e.value * (e.row == e.col ? M(e.row, e.col) : 2.0 * M(e.row, e.col));
    return acc;
}

// Largest a with X + a*dX PSD, given the Cholesky factor L of X.
double step_to_boundary(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& dX) {
    MatrixXd S = llt.matrixL().solve(dX);
    S = llt.matrixL().solve(S.transpose()).eval();  // L^-1 dX L^-T
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()),
                                               Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

struct Presolve {
    Eigen::MatrixXd E;      // reduced, full row rank
    VectorXd d;             // reduced rhs
    std::vector<int> kept;  // original row indices
    bool inconsistent = false;
};

Presolve presolve_equalities(const Eigen::SparseMatrix<double>& Efull, const VectorXd& dfull) {
    Presolve out;
    const int p = static_cast<int>(Efull.rows());
    const int N = static_cast<int>(Efull.cols());
    if (p == 0) {
        out.E.resize(0, N);
        out.d.resize(0);
        return out;
    }
    MatrixXd Edense = MatrixXd(Efull);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(Edense.transpose());  // N x p
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    std::vector<int> kept, dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (int k = 0; k < p; ++k)
        (k < rank ? kept : dropped).push_back(perm(k));
    std::sort(kept.begin(), kept.end());
    std::sort(dropped.begin(), dropped.end());

    out.kept = kept;
    out.E.resize(rank, N);
    out.d.resize(rank);
    for (int k = 0; k < rank; ++k) {
        out.E.row(k) = Edense.row(kept[k]);
        out.d(k) = dfull(kept[k]);
    }
    if (!dropped.empty()) {
        // Each dropped row must be a consistent combination of the kept ones.
        Eigen::HouseholderQR<MatrixXd> lsq(out.E.transpose());  // N x rank
        for (int j : dropped) {
            VectorXd gamma = lsq.solve(Edense.row(j).transpose());
            const double resid =
                (out.E.transpose() * gamma - Edense.row(j).transpose()).norm();
            const double scale = 1.0 + Edense.row(j).norm();
            if (resid > 1e-7 * scale) {
                // Not actually dependent; the QR threshold misjudged. Keep it.
                out.E.conservativeResize(out.E.rows() + 1, Eigen::NoChange);
                out.d.conservativeResize(out.d.size() + 1);
                out.E.row(out.E.rows() - 1) = Edense.row(j);
                out.d(out.d.size() - 1) = dfull(j);
                out.kept.push_back(j);
                continue;
            }
            if (std::abs(gamma.dot(out.d.head(rank)) - dfull(j)) >
                1e-7 * (1.0 + std::abs(dfull(j)))) {
                out.inconsistent = true;
                return out;
            }
        }
    }
    return out;
}

}  // namespace

ConicSolution solve(const ConicProgram& prog, const SolveOptions& opts) {
    const int N = prog.num_vars();
    const int nb = prog.num_blocks();
    if (nb == 0) throw std::invalid_argument("solve: program has no PSD blocks");
    if (N == 0) throw std::invalid_argument("solve: program has no variables");

    std::vector<BlockData> blk(nb);
    double data_max = 0.0;
    for (int b = 0; b < nb; ++b) {
        const auto& src = prog.blocks()[b];
        blk[b].size = src.size;
        blk[b].F0 = MatrixXd::Zero(src.size, src.size);
        add_scaled(blk[b].F0, coalesce(src.f0), 1.0);
        data_max = std::max(data_max, blk[b].F0.cwiseAbs().maxCoeff());
        for (const auto& [var, entries] : src.coeffs) {
            auto co = coalesce(entries);
            if (co.empty()) continue;
            for (const auto& e : co) data_max = std::max(data_max, std::abs(e.value));
            blk[b].vars.push_back(var);
            blk[b].F.push_back(std::move(co));
        }
    }

    const VectorXd& c = prog.objective();
    Eigen::SparseMatrix<double> Efull = prog.equality_matrix();
    VectorXd dfull = Eigen::Map<const VectorXd>(prog.equality_rhs().data(),
                                                prog.equality_rhs().size());
    const int p_orig = static_cast<int>(dfull.size());

    ConicSolution sol;
    sol.v = VectorXd::Zero(N);
    sol.lambda = VectorXd::Zero(p_orig);

    Presolve ps = presolve_equalities(Efull, dfull);
    if (ps.inconsistent) {
        sol.status = SolveStatus::infeasible;
        return sol;
    }
    const MatrixXd& E = ps.E;
    const VectorXd& d = ps.d;
    const int q = static_cast<int>(d.size());
    {
        // Contract check: presolve must leave a full-row-rank system.
        if (q > 0) {
            Eigen::ColPivHouseholderQR<MatrixXd> chk(E.transpose());
            chk.setThreshold(1e-12);
            if (chk.rank() < q)
                throw std::runtime_error("solve: equalities remain rank-deficient after presolve");
        }
    }

    const double cmax = N > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
    const double dmax = q > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
    const double data_scale = 1.0 + std::max({cmax, dmax, data_max});

    // Infeasible start: v = 0, lambda = 0, X = Z = xi*I.
    const double xi = std::max(10.0, std::sqrt(data_scale));
    VectorXd v = VectorXd::Zero(N);
    VectorXd lam = VectorXd::Zero(q);
    std::vector<MatrixXd> X(nb), Z(nb);
    double total_dim = 0.0;
    for (int b = 0; b < nb; ++b) {
        X[b] = xi * MatrixXd::Identity(blk[b].size, blk[b].size);
        Z[b] = xi * MatrixXd::Identity(blk[b].size, blk[b].size);
        total_dim += blk[b].size;
    }

    auto primal_block = [&](int b, const VectorXd& vv) {
        MatrixXd M = blk[b].F0;
        for (std::size_t a = 0; a < blk[b].vars.size(); ++a)
            add_scaled(M, blk[b].F[a], vv(blk[b].vars[a]));
        return M;
    };

    double best_score = std::numeric_limits<double>::infinity();
    ConicSolution best = sol;
    int stall = 0;
    int no_progress = 0;

    // On a degenerate exit (stall, factorization breakdown, iteration cap) the
    // tracked best iterate may already satisfy the tolerances; report it as
    // optimal rather than letting a late bad step mask a converged solve.
    auto settle = [&](SolveStatus fallback) {
        ConicSolution out = best;
        out.status = (out.primal_feas <= opts.tol_feas &&
                      out.dual_feas <= opts.tol_feas && out.gap_rel <= opts.tol_gap)
                         ? SolveStatus::optimal
                         : fallback;
        out.history = sol.history;
        return out;
    };

    auto finish = [&](SolveStatus st, const VectorXd& vv, const VectorXd& ll,
                      const std::vector<MatrixXd>& XX, const std::vector<MatrixXd>& ZZ,
                      double pobj, double dobj, double pf, double df, double gr,
                      int iters) {
        sol.status = st;
        sol.v = vv;
        sol.lambda = VectorXd::Zero(p_orig);
        for (int k = 0; k < q; ++k) sol.lambda(ps.kept[k]) = ll(k);
        sol.X = XX;
        sol.Z = ZZ;
        sol.primal_obj = pobj;
        sol.dual_obj = dobj;
        sol.primal_feas = pf;
        sol.dual_feas = df;
        sol.gap_rel = gr;
        sol.iterations = iters;
        return sol;
    };

    std::vector<MatrixXd> Winv(nb), Ginv(nb), G(nb), Kt(nb), WRW(nb);
    std::vector<VectorXd> sigma(nb);
    std::vector<MatrixXd> Rp(nb), dX(nb), dZ(nb), dXaff(nb), dZaff(nb);
    std::vector<Eigen::LLT<MatrixXd>> lltX(nb), lltZ(nb);

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        // --- residuals and merit numbers -----------------------------------
        VectorXd re = d - E * v;  // q
        VectorXd rd = c;
        if (q > 0) rd -= E.transpose() * lam;
        double rp_block_max = 0.0;
        double xz = 0.0;
        for (int b = 0; b < nb; ++b) {
            Rp[b] = primal_block(b, v) - X[b];
            rp_block_max = std::max(rp_block_max,
                                    Rp[b].size() ? Rp[b].cwiseAbs().maxCoeff() : 0.0);
            for (std::size_t a = 0; a < blk[b].vars.size(); ++a)
                rd(blk[b].vars[a]) -= inner(blk[b].F[a], Z[b]);
            xz += X[b].cwiseProduct(Z[b]).sum();
        }
        const double mu = xz / total_dim;
        const double pobj = c.dot(v);
        double dobj = q > 0 ? d.dot(lam) : 0.0;
        for (int b = 0; b < nb; ++b) dobj -= blk[b].F0.cwiseProduct(Z[b]).sum();

        const double pfeas = std::max(q > 0 ? re.cwiseAbs().maxCoeff() : 0.0,
                                      rp_block_max) /
                             (1.0 + dmax);
        const double dfeas = rd.cwiseAbs().maxCoeff() / (1.0 + cmax);
        const double gap_rel =
            std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

        if (opts.verbose)
            std::cerr << "it " << it << "  mu " << mu << "  pobj " << pobj << "  dobj "
                      << dobj << "  pfeas " << pfeas << "  dfeas " << dfeas << "\n";

        const double score = std::max({pfeas, dfeas, gap_rel});
        if (score < best_score) {
            best_score = score;
            no_progress = 0;
            best = finish(SolveStatus::numerical, v, lam, X, Z, pobj, dobj, pfeas, dfeas,
                          gap_rel, it);
        } else if (++no_progress >= 40) {
            // formation error near a degenerate face can trap the iteration in
            // a limit cycle; the best iterate is all we will ever get
            return settle(SolveStatus::numerical);
        }

        if (pfeas <= opts.tol_feas && dfeas <= opts.tol_feas && gap_rel <= opts.tol_gap)
            return finish(SolveStatus::optimal, v, lam, X, Z, pobj, dobj, pfeas, dfeas,
                          gap_rel, it);
        if (dobj > 1e10 * data_scale && dfeas <= std::sqrt(opts.tol_feas))
            return finish(SolveStatus::infeasible, v, lam, X, Z, pobj, dobj, pfeas, dfeas,
                          gap_rel, it);
        if (pobj < -1e10 * data_scale && pfeas <= std::sqrt(opts.tol_feas))
            return finish(SolveStatus::unbounded, v, lam, X, Z, pobj, dobj, pfeas, dfeas,
                          gap_rel, it);

        // --- NT scaling per block ------------------------------------------
        bool breakdown = false;
        for (int b = 0; b < nb; ++b) {
            const int s = blk[b].size;
            lltX[b].compute(X[b]);
            lltZ[b].compute(Z[b]);
            if (lltX[b].info() != Eigen::Success || lltZ[b].info() != Eigen::Success) {
                breakdown = true;
                break;
            }
            MatrixXd L = lltX[b].matrixL();
            MatrixXd R = lltZ[b].matrixL();
            Eigen::JacobiSVD<MatrixXd> svd(R.transpose() * L,
                                           Eigen::ComputeFullU | Eigen::ComputeFullV);
            sigma[b] = svd.singularValues();
            if (sigma[b].minCoeff() <= 0) {
                breakdown = true;
                break;
            }
            VectorXd shalf = sigma[b].cwiseSqrt();
            // G = L V Sigma^{-1/2};  G^{-1} = Sigma^{1/2} V' L^{-1}
            G[b] = L * svd.matrixV() * shalf.cwiseInverse().asDiagonal();
            MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(
                MatrixXd::Identity(s, s));
            Ginv[b] = shalf.asDiagonal() * svd.matrixV().transpose() * Linv;
            Winv[b] = Ginv[b].transpose() * Ginv[b];
            WRW[b] = Winv[b] * Rp[b] * Winv[b];
        }
        if (breakdown)
            return settle(SolveStatus::numerical);

        // --- Schur complement of the KKT system ----------------------------
        MatrixXd B = MatrixXd::Zero(N, N);
        for (int b = 0; b < nb; ++b) {
            const auto& vars = blk[b].vars;
            for (std::size_t a = 0; a < vars.size(); ++a) {
                MatrixXd T = MatrixXd::Zero(blk[b].size, blk[b].size);
                for (const auto& e : blk[b].F[a]) {
                    T.noalias() +=
                        e.value * (Winv[b].col(e.row) * Winv[b].col(e.col).transpose());
                    if (e.row != e.col)
                        T.noalias() +=
                            e.value * (Winv[b].col(e.col) * Winv[b].col(e.row).transpose());
                }
                for (std::size_t a2 = a; a2 < vars.size(); ++a2) {
                    const double val = inner(blk[b].F[a2], T);
                    B(vars[a], vars[a2]) += val;
                    if (a2 != a) B(vars[a2], vars[a]) += val;
                }
            }
        }

        Eigen::LLT<MatrixXd> lltB(B);
        if (lltB.info() != Eigen::Success) {
            // tiny deterministic jitter ladder before giving up
            double eps = 1e-12 * (1.0 + B.trace() / N);
            for (int tries = 0; tries < 4 && lltB.info() != Eigen::Success; ++tries) {
                lltB.compute(B + eps * MatrixXd::Identity(N, N));
                eps *= 100;
            }
            if (lltB.info() != Eigen::Success)
                return settle(SolveStatus::numerical);
        }
        MatrixXd BinvEt;
        Eigen::LLT<MatrixXd> lltS;
        if (q > 0) {
            BinvEt = lltB.solve(E.transpose());
            MatrixXd S = E * BinvEt;
            lltS.compute(0.5 * (S + S.transpose()));
            if (lltS.info() != Eigen::Success)
                return settle(SolveStatus::numerical);
        }

        auto solve_once = [&](const VectorXd& r1, const VectorXd& r2, VectorXd& ov,
                              VectorXd& ol) {
            VectorXd t1 = lltB.solve(r1);
            if (q > 0) {
                ol = lltS.solve(r2 - E * t1);
                ov = t1 + BinvEt * ol;
            } else {
                ol.resize(0);
                ov = t1;
            }
        };
        // Solves  B dv - E' dl = g - rd,  E dv = re.  The factors lose digits
        // near a degenerate face, so polish with fixed-precision iterative
        // refinement against the unfactored B and E.
        auto kkt_solve = [&](const VectorXd& g, VectorXd& dv, VectorXd& dl) {
            const VectorXd rhs1 = g - rd;
            solve_once(rhs1, re, dv, dl);
            for (int pass = 0; pass < 2; ++pass) {
                VectorXd r1 = rhs1 - B * dv;
                if (q > 0) r1 += E.transpose() * dl;
                VectorXd r2 = q > 0 ? VectorXd(re - E * dv) : VectorXd();
                VectorXd cv, cl;
                solve_once(r1, r2, cv, cl);
                dv += cv;
                if (q > 0) dl += cl;
            }
        };

        // --- predictor ------------------------------------------------------
        // Kt holds the scaled complementarity target G^-T Q G^-1; the full
        // dual step is dZ = Kt - W^-1 dX W^-1 with dX = sum dv_i F_i + Rp, so
        // the Schur RHS uses <F_i, Kt - W^-1 Rp W^-1>.
        VectorXd g = VectorXd::Zero(N);
        for (int b = 0; b < nb; ++b) {
            Kt[b] = -Z[b];
            MatrixXd lead = Kt[b] - WRW[b];
            for (std::size_t a = 0; a < blk[b].vars.size(); ++a)
                g(blk[b].vars[a]) += inner(blk[b].F[a], lead);
        }
        VectorXd dv, dl;
        kkt_solve(g, dv, dl);
        double ap_aff = 1.0, ad_aff = 1.0;
        for (int b = 0; b < nb; ++b) {
            dXaff[b] = Rp[b];
            for (std::size_t a = 0; a < blk[b].vars.size(); ++a)
                add_scaled(dXaff[b], blk[b].F[a], dv(blk[b].vars[a]));
            dZaff[b] = Kt[b] - Winv[b] * dXaff[b] * Winv[b];
            ap_aff = std::min(ap_aff, step_to_boundary(lltX[b], dXaff[b]));
            ad_aff = std::min(ad_aff, step_to_boundary(lltZ[b], dZaff[b]));
        }
        double mu_aff = 0.0;
        for (int b = 0; b < nb; ++b)
            mu_aff += (X[b] + ap_aff * dXaff[b]).cwiseProduct(Z[b] + ad_aff * dZaff[b]).sum();
        mu_aff /= total_dim;
        double sigma_c =
            std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 1e-8, 1.0);
        // Keep complementarity tethered to feasibility: once mu sinks far
        // below the residuals, the NT scaling turns ill-conditioned and the
        // dual residual stops contracting, so hold mu near the infeasibility
        // level until the residuals catch up.
        const double infeas =
            std::max({q > 0 ? re.cwiseAbs().maxCoeff() : 0.0, rp_block_max,
                      rd.cwiseAbs().maxCoeff()});
        if (infeas > 10.0 * mu)
            sigma_c = std::max(sigma_c, std::min(1.0, infeas / (10.0 * mu)));

        // --- corrector ------------------------------------------------------
        g.setZero();
        for (int b = 0; b < nb; ++b) {
            const int s = blk[b].size;
            MatrixXd dXh = Ginv[b] * dXaff[b] * Ginv[b].transpose();
            MatrixXd dZh = G[b].transpose() * dZaff[b] * G[b];
            MatrixXd M = dXh * dZh;
            MatrixXd Q(s, s);
            for (int i = 0; i < s; ++i)
                for (int j = 0; j < s; ++j) {
                    double rhs = -0.5 * (M(i, j) + M(j, i));
                    if (i == j) rhs += sigma_c * mu - sigma[b](i) * sigma[b](i);
                    Q(i, j) = 2.0 * rhs / (sigma[b](i) + sigma[b](j));
                }
            Kt[b] = Ginv[b].transpose() * Q * Ginv[b];
            MatrixXd lead = Kt[b] - WRW[b];
            for (std::size_t a = 0; a < blk[b].vars.size(); ++a)
                g(blk[b].vars[a]) += inner(blk[b].F[a], lead);
        }
        kkt_solve(g, dv, dl);
        double ap = 1.0, ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            dX[b] = Rp[b];
            for (std::size_t a = 0; a < blk[b].vars.size(); ++a)
                add_scaled(dX[b], blk[b].F[a], dv(blk[b].vars[a]));
            dZ[b] = Kt[b] - Winv[b] * dX[b] * Winv[b];
            ap = std::min(ap, step_to_boundary(lltX[b], dX[b]));
            ad = std::min(ad, step_to_boundary(lltZ[b], dZ[b]));
        }
        const double gamma = 0.9 + 0.09 * std::min(1.0, std::min(ap_aff, ad_aff));
        ap = std::min(1.0, gamma * ap);
        ad = std::min(1.0, gamma * ad);

        sol.history.push_back({it, mu, pobj, dobj, pfeas, dfeas, ap, ad});

        if (ap < 1e-8 && ad < 1e-8) {
            if (++stall >= 3) return settle(SolveStatus::numerical);
        } else {
            stall = 0;
        }

        v += ap * dv;
        if (q > 0) lam += ad * dl;
        for (int b = 0; b < nb; ++b) {
            X[b] += ap * dX[b];
            Z[b] += ad * dZ[b];
            X[b] = 0.5 * (X[b] + X[b].transpose()).eval();
            Z[b] = 0.5 * (Z[b] + Z[b].transpose()).eval();
        }
    }

    auto out = settle(SolveStatus::max_iter);
    out.iterations = it;
    return out;
}

ResidualReport residuals(const ConicProgram& prog, const ConicSolution& sol) {
    ResidualReport rep{};
    Eigen::SparseMatrix<double> E = prog.equality_matrix();
    VectorXd d = Eigen::Map<const VectorXd>(prog.equality_rhs().data(),
                                            prog.equality_rhs().size());
    rep.primal_eq = d.size() > 0 ? (E * sol.v - d).cwiseAbs().maxCoeff() : 0.0;

    VectorXd rd = prog.objective();
    if (d.size() > 0) rd -= E.transpose() * sol.lambda;
    for (int b = 0; b < prog.num_blocks(); ++b) {
        const auto& src = prog.blocks()[b];
        MatrixXd Xb = MatrixXd::Zero(src.size, src.size);
        add_scaled(Xb, coalesce(src.f0), 1.0);
        for (const auto& [var, entries] : src.coeffs) {
            auto co = coalesce(entries);
            add_scaled(Xb, co, sol.v(var));
            if (b < static_cast<int>(sol.Z.size()))
                rd(var) -= inner(co, sol.Z[b]);
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> esx(Xb, Eigen::EigenvaluesOnly);
        rep.min_eig_X.push_back(esx.eigenvalues().minCoeff());
        if (b < static_cast<int>(sol.Z.size())) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> esz(sol.Z[b], Eigen::EigenvaluesOnly);
            rep.min_eig_Z.push_back(esz.eigenvalues().minCoeff());
        }
    }
    rep.dual_eq = rd.cwiseAbs().maxCoeff();

    double pobj = prog.objective().dot(sol.v);
    double dobj = d.size() > 0 ? d.dot(sol.lambda) : 0.0;
    for (int b = 0; b < prog.num_blocks() && b < static_cast<int>(sol.Z.size()); ++b) {
        const auto& src = prog.blocks()[b];
        MatrixXd F0 = MatrixXd::Zero(src.size, src.size);
        add_scaled(F0, coalesce(src.f0), 1.0);
        dobj -= F0.cwiseProduct(sol.Z[b]).sum();
    }
    rep.gap_abs = std::abs(pobj - dobj);
    rep.gap_rel = rep.gap_abs / (1.0 + std::abs(pobj) + std::abs(dobj));
    return rep;
}

}  // namespace mocp

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <string>
#include <vector>

namespace mocp {

// min c'v  s.t.  E v = d,   X_b = F0_b + sum_i v_i Fi_b  is PSD per block.
// Block coefficient matrices are stored sparse, upper triangle only.
class ConicProgram {
public:
    struct Entry {
        int row, col;  // row <= col
        double value;
    };
    struct Block {
        int size = 0;
        std::vector<Entry> f0;
        std::map<int, std::vector<Entry>> coeffs;  // var index -> entries
    };

    explicit ConicProgram(int num_vars);

    int num_vars() const { return num_vars_; }
    int num_equalities() const { return static_cast<int>(rhs_.size()); }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }

    void set_objective(int var, double coef);
    const Eigen::VectorXd& objective() const { return c_; }

    // Returns the row index.
    int add_equality(const std::vector<std::pair<int, double>>& row, double rhs);
    // retarget an existing equality without touching its coefficients
    void set_equality_rhs(int row, double rhs) { rhs_.at(row) = rhs; }
    Eigen::SparseMatrix<double> equality_matrix() const;  // num_eq x num_vars
    const std::vector<double>& equality_rhs() const { return rhs_; }

    // Returns the block index.
    int add_block(int size);
    // var = -1 addresses the constant part F0.
    void add_block_entry(int block, int var, int row, int col, double value);
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    int num_vars_;
    Eigen::VectorXd c_;
    std::vector<std::vector<std::pair<int, double>>> erows_;
    std::vector<double> rhs_;
    std::vector<Block> blocks_;
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iter, numerical };

std::string to_string(SolveStatus s);

struct IterateInfo {
    int iter;
    double mu, primal_obj, dual_obj, primal_feas, dual_feas, step_primal, step_dual;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::numerical;
    Eigen::VectorXd v;                    // primal variables
    Eigen::VectorXd lambda;               // equality multipliers (original row order)
    std::vector<Eigen::MatrixXd> X;       // primal PSD blocks
    std::vector<Eigen::MatrixXd> Z;       // dual PSD blocks
    double primal_obj = 0.0;
    double dual_obj = 0.0;                // d'lambda - sum_b <F0_b, Z_b>
    double gap_rel = 0.0;
    double primal_feas = 0.0;
    double dual_feas = 0.0;
    int iterations = 0;
    std::vector<IterateInfo> history;
};

struct SolveOptions {
    double tol_gap = 1e-8;   // relative duality gap
    double tol_feas = 1e-7;  // scaled primal/dual residuals
    int max_iter = 200;
    bool verbose = false;
};

// Primal-dual interior-point method: Nesterov-Todd scaling, Mehrotra
// predictor-corrector, infeasible start. Deterministic.
ConicSolution solve(const ConicProgram& p, const SolveOptions& opts = {});

struct ResidualReport {
    double primal_eq;                // max |Ev - d|
    double dual_eq;                  // max |c - E'lambda - <Fi, Z>|
    std::vector<double> min_eig_X;   // per block, of F0 + sum v_i Fi
    std::vector<double> min_eig_Z;   // per block
    double gap_abs;                  // |primal - dual|
    double gap_rel;
};

// Recomputed from scratch; independent of solver internals.
ResidualReport residuals(const ConicProgram& p, const ConicSolution& sol);

}  // namespace mocp

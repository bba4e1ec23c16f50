#include "mocp/sdpa_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mocp {

namespace {

std::map<std::pair<int, int>, double> coalesced(const std::vector<ConicProgram::Entry>& raw) {
    std::map<std::pair<int, int>, double> acc;
    for (const auto& e : raw) acc[{e.row, e.col}] += e.value;
    return acc;
}

void entry_line(std::ostream& out, int mat, int block, int i, int j, double v) {
    if (v == 0.0) return;
    out << mat << " " << block << " " << i + 1 << " " << j + 1 << " "
        << std::setprecision(17) << v << "\n";
}

}  // namespace

void export_sdpa(const ConicProgram& p, std::ostream& out) {
    if (p.num_blocks() == 0)
        throw std::invalid_argument("export_sdpa: program has no PSD blocks");
    const int m = p.num_vars();
    const int q = p.num_equalities();
    const int nblock = p.num_blocks() + (q > 0 ? 1 : 0);

    out << m << "\n" << nblock << "\n";
    for (int b = 0; b < p.num_blocks(); ++b) out << p.blocks()[b].size << " ";
    if (q > 0) out << -(2 * q);
    out << "\n";
    out << std::setprecision(17);
    const Eigen::VectorXd& c = p.objective();
    for (int i = 0; i < m; ++i) out << c(i) << (i + 1 < m ? " " : "");
    out << "\n";

    for (int b = 0; b < p.num_blocks(); ++b) {
        const auto& blk = p.blocks()[b];
        for (const auto& [pos, v] : coalesced(blk.f0))
            entry_line(out, 0, b + 1, pos.first, pos.second, -v);  // file keeps -F0
        for (const auto& [var, entries] : blk.coeffs)
            for (const auto& [pos, v] : coalesced(entries))
                entry_line(out, var + 1, b + 1, pos.first, pos.second, v);
    }
    if (q > 0) {
        const int eb = p.num_blocks() + 1;
        Eigen::SparseMatrix<double> E = p.equality_matrix();
        const auto& d = p.equality_rhs();
        for (int j = 0; j < q; ++j) {
            entry_line(out, 0, eb, j, j, d[j]);
            entry_line(out, 0, eb, q + j, q + j, -d[j]);
        }
        for (int col = 0; col < E.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(E, col); it; ++it) {
                entry_line(out, static_cast<int>(it.col()) + 1, eb,
                           static_cast<int>(it.row()), static_cast<int>(it.row()),
                           it.value());
                entry_line(out, static_cast<int>(it.col()) + 1, eb,
                           q + static_cast<int>(it.row()), q + static_cast<int>(it.row()),
                           -it.value());
            }
    }
}

void export_sdpa_file(const ConicProgram& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_sdpa: cannot open " + path);
    export_sdpa(p, out);
}

namespace {

// Tokens: numbers and words; SDPA punctuation becomes whitespace, comment
// lines ("..." or *...) are skipped.
std::vector<std::string> tokenize(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && (line[0] == '"' || line[0] == '*')) continue;
        for (char& ch : line)
            if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')' || ch == '=')
                ch = ' ';
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
    }
    return tokens;
}

double to_number(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("SDPA parse: expected number for ") + what +
                                 ", got '" + tok + "'");
    }
}

class TokenCursor {
public:
    TokenCursor(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}
    bool done() const { return pos_ >= tokens_.size(); }
    const std::string& peek() const { return tokens_.at(pos_); }
    std::string next(const char* what) {
        if (done()) throw std::runtime_error(std::string("SDPA parse: missing ") + what);
        return tokens_[pos_++];
    }
    double number(const char* what) { return to_number(next(what), what); }
    int integer(const char* what) {
        double v = number(what);
        if (std::abs(v - std::llround(v)) > 1e-9)
            throw std::runtime_error(std::string("SDPA parse: expected integer for ") + what);
        return static_cast<int>(std::llround(v));
    }
    // advance past the given word; false if absent
    bool seek(const std::string& word) {
        for (std::size_t i = pos_; i < tokens_.size(); ++i)
            if (tokens_[i] == word) {
                pos_ = i + 1;
                return true;
            }
        return false;
    }

private:
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

SdpaProblem import_problem_sdpa(std::istream& in) {
    TokenCursor cur(tokenize(in));
    const int m = cur.integer("variable count");
    const int nblock = cur.integer("block count");
    if (m <= 0 || nblock <= 0) throw std::runtime_error("SDPA parse: empty problem");

    SdpaProblem out;
    out.program = ConicProgram(m);
    for (int b = 0; b < nblock; ++b) out.block_struct.push_back(cur.integer("block size"));
    for (int i = 0; i < m; ++i) out.program.set_objective(i, cur.number("objective"));

    // A trailing diagonal block of even size may be a bank of paired equality
    // slacks; its entries are buffered and folded after the pattern check.
    const bool defer_last = out.block_struct.back() < 0 && (-out.block_struct.back()) % 2 == 0;
    out.expanded.resize(nblock);
    for (int b = 0; b < nblock; ++b) {
        const int s = out.block_struct[b];
        if (s == 0) throw std::runtime_error("SDPA parse: zero block size");
        if (defer_last && b == nblock - 1) continue;
        if (s > 0) {
            out.expanded[b].push_back(out.program.add_block(s));
        } else {
            for (int k = 0; k < -s; ++k)
                out.expanded[b].push_back(out.program.add_block(1));
        }
    }

    std::map<std::pair<int, int>, double> tail;  // (mat, diag index) -> file value
    while (!cur.done()) {
        const int mat = cur.integer("matrix index");
        const int blk = cur.integer("block index");
        int i = cur.integer("row");
        int j = cur.integer("column");
        const double v = cur.number("value");
        if (mat < 0 || mat > m) throw std::runtime_error("SDPA parse: matrix index out of range");
        if (blk < 1 || blk > nblock)
            throw std::runtime_error("SDPA parse: block index out of range");
        const int s = out.block_struct[blk - 1];
        const double stored = (mat == 0) ? -v : v;  // file stores -F0
        if (s > 0) {
            if (i < 1 || j < 1 || i > s || j > s)
                throw std::runtime_error("SDPA parse: entry position out of range");
            if (i > j) std::swap(i, j);
            out.program.add_block_entry(out.expanded[blk - 1][0], mat - 1, i - 1, j - 1,
                                        stored);
        } else {
            if (i != j || i < 1 || i > -s)
                throw std::runtime_error("SDPA parse: diagonal block entry must be (i,i)");
            if (defer_last && blk == nblock) {
                tail[{mat, i - 1}] += v;
            } else {
                out.program.add_block_entry(out.expanded[blk - 1][i - 1], mat - 1, 0, 0,
                                            stored);
            }
        }
    }

    if (defer_last) {
        const int S = -out.block_struct.back();
        const int q = S / 2;
        auto at = [&](int mat, int k) {
            const auto it = tail.find({mat, k});
            return it == tail.end() ? 0.0 : it->second;
        };
        // slack pairs mirror exactly: row q+k is the negation of row k. An
        // absent pair folds into the 0 = 0 row a fully pinned mass-balance
        // test leaves behind, which is how the direct assembly carries it too.
        bool fold = true;
        for (int k = 0; fold && k < q; ++k)
            for (int mat = 0; mat <= m; ++mat)
                if (at(mat, q + k) != -at(mat, k)) {
                    fold = false;
                    break;
                }
        if (fold) {
            out.folded_equalities = q;
            for (int k = 0; k < q; ++k) {
                std::vector<std::pair<int, double>> row;
                for (int mat = 1; mat <= m; ++mat)
                    if (const double a = at(mat, k); a != 0.0) row.push_back({mat - 1, a});
                out.program.add_equality(row, at(0, k));
            }
        } else {
            for (int k = 0; k < S; ++k)
                out.expanded.back().push_back(out.program.add_block(1));
            for (const auto& [key, v] : tail)
                out.program.add_block_entry(out.expanded.back()[key.second], key.first - 1,
                                            0, 0, key.first == 0 ? -v : v);
        }
    }
    return out;
}

SdpaProblem import_problem_sdpa_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_problem_sdpa: cannot open " + path);
    return import_problem_sdpa(in);
}

namespace {

const char* phase_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "pdOPT";
        case SolveStatus::infeasible: return "pINF_dFEAS";
        case SolveStatus::unbounded: return "dINF_pFEAS";
        case SolveStatus::max_iter: return "pdFEAS";
        case SolveStatus::numerical: return "noINFO";
    }
    return "noINFO";
}

void write_block(std::ostream& out, const Eigen::MatrixXd& M, bool diagonal) {
    out << std::setprecision(17);
    if (diagonal) {
        out << "{";
        for (int i = 0; i < M.rows(); ++i) out << (i ? "," : "") << M(i, i);
        out << "}";
        return;
    }
    out << "{";
    for (int i = 0; i < M.rows(); ++i) {
        out << (i ? "," : "") << "{";
        for (int j = 0; j < M.cols(); ++j) out << (j ? "," : "") << M(i, j);
        out << "}";
    }
    out << "}";
}

}  // namespace

void write_solution_sdpa(const SdpaProblem& layout, const ConicSolution& sol,
                         std::ostream& out) {
    const int nblock = static_cast<int>(layout.block_struct.size());
    out << "phase.value  = " << phase_string(sol.status) << "\n";
    out << std::setprecision(17);
    out << "objValPrimal = " << sol.primal_obj << "\n";
    out << "objValDual   = " << sol.dual_obj << "\n";
    out << "xVec = \n{";
    for (int i = 0; i < sol.v.size(); ++i) out << (i ? "," : "") << sol.v(i);
    out << "}\n";

    auto regroup = [&](const std::vector<Eigen::MatrixXd>& per_program_block, bool dual,
                       const char* label) {
        out << label << " = \n{\n";
        for (int b = 0; b < nblock; ++b) {
            const int s = layout.block_struct[b];
            if (layout.folded_equalities > 0 && b == nblock - 1) {
                // equality rows resurface as the slack-pair block: zero primal
                // slacks, multipliers split by sign so that z+ - z- = lambda
                const int q = layout.folded_equalities;
                Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2 * q, 2 * q);
                if (dual)
                    for (int k = 0; k < q; ++k) {
                        diag(k, k) = std::max(sol.lambda(k), 0.0);
                        diag(q + k, q + k) = std::max(-sol.lambda(k), 0.0);
                    }
                write_block(out, diag, true);
            } else if (s > 0) {
                write_block(out, per_program_block.at(layout.expanded[b][0]), false);
            } else {
                Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(-s, -s);
                for (int k = 0; k < -s; ++k)
                    diag(k, k) = per_program_block.at(layout.expanded[b][k])(0, 0);
                write_block(out, diag, true);
            }
            out << "\n";
        }
        out << "}\n";
    };
    regroup(sol.X, false, "xMat");
    regroup(sol.Z, true, "yMat");
}

ConicSolution import_solution_sdpa(std::istream& in, const ConicProgram& p) {
    TokenCursor cur(tokenize(in));
    ConicSolution sol;

    TokenCursor probe = cur;
    if (probe.seek("phase.value")) {
        const std::string phase = probe.next("phase");
        if (phase.find("pdOPT") != std::string::npos)
            sol.status = SolveStatus::optimal;
        else if (phase.find("pINF") != std::string::npos ||
                 phase.find("pdINF") != std::string::npos)
            sol.status = SolveStatus::infeasible;
        else if (phase.find("dINF") != std::string::npos)
            sol.status = SolveStatus::unbounded;
        else if (phase.find("pdFEAS") != std::string::npos ||
                 phase.find("pFEAS") != std::string::npos ||
                 phase.find("dFEAS") != std::string::npos)
            sol.status = SolveStatus::max_iter;
        else
            sol.status = SolveStatus::numerical;
    }

    const int N = p.num_vars();
    const int q = p.num_equalities();
    if (!cur.seek("xVec")) throw std::runtime_error("SDPA solution: xVec section missing");
    sol.v.resize(N);
    for (int i = 0; i < N; ++i) sol.v(i) = cur.number("xVec entry");

    if (!cur.seek("yMat")) throw std::runtime_error("SDPA solution: yMat section missing");
    for (int b = 0; b < p.num_blocks(); ++b) {
        const int s = p.blocks()[b].size;
        Eigen::MatrixXd Z(s, s);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) Z(i, j) = cur.number("yMat entry");
        sol.Z.push_back(0.5 * (Z + Z.transpose()));
    }
    sol.lambda = Eigen::VectorXd::Zero(q);
    if (q > 0) {
        std::vector<double> diag(2 * q);
        for (int k = 0; k < 2 * q; ++k) diag[k] = cur.number("equality dual entry");
        for (int j = 0; j < q; ++j) sol.lambda(j) = diag[j] - diag[q + j];
    }

    // Rebuild primal blocks and objectives from scratch.
    for (int b = 0; b < p.num_blocks(); ++b) {
        const auto& blk = p.blocks()[b];
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(blk.size, blk.size);
        for (const auto& [pos, v] : coalesced(blk.f0)) {
            X(pos.first, pos.second) += v;
            if (pos.first != pos.second) X(pos.second, pos.first) += v;
        }
        for (const auto& [var, entries] : blk.coeffs)
            for (const auto& [pos, v] : coalesced(entries)) {
                X(pos.first, pos.second) += v * sol.v(var);
                if (pos.first != pos.second) X(pos.second, pos.first) += v * sol.v(var);
            }
        sol.X.push_back(X);
    }
    sol.primal_obj = p.objective().dot(sol.v);
    double dobj = 0.0;
    for (int j = 0; j < q; ++j) dobj += p.equality_rhs()[j] * sol.lambda(j);
    for (int b = 0; b < p.num_blocks(); ++b) {
        const auto& blk = p.blocks()[b];
        for (const auto& [pos, v] : coalesced(blk.f0))
            dobj -= v * (pos.first == pos.second ? sol.Z[b](pos.first, pos.second)
                                                 : 2.0 * sol.Z[b](pos.first, pos.second));
    }
    sol.dual_obj = dobj;
    return sol;
}

ConicSolution import_solution_sdpa_file(const std::string& path, const ConicProgram& p) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_solution_sdpa: cannot open " + path);
    return import_solution_sdpa(in, p);
}

}  // namespace mocp

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mocp/sdp.hpp"

namespace mocp {

// Writes the program in SDPA sparse format (".dat-s"). The file convention is
// min c'x with X = sum_i x_i F_i - F0 PSD, so constant parts flip sign on the
// way out; equalities Ev = d become a trailing diagonal block holding the
// paired slacks (Ev - d, d - Ev).
void export_sdpa(const ConicProgram& p, std::ostream& out);
void export_sdpa_file(const ConicProgram& p, const std::string& path);

// A .dat-s read back in. Diagonal blocks are expanded into 1x1 PSD blocks of
// the in-memory program; block_struct/expanded remember the file layout so a
// solution can be written back in the original shape. When the trailing
// diagonal block consists of exactly opposed slack pairs (the export_sdpa
// encoding of equalities), it is folded back into first-class equality rows:
// the paired form has an empty strict interior, which an interior-point
// method cannot close, while the folded form solves cleanly.
struct SdpaProblem {
    ConicProgram program{0};
    std::vector<int> block_struct;            // negative = diagonal
    std::vector<std::vector<int>> expanded;   // file block -> program block ids
    int folded_equalities = 0;  // rows recovered from the trailing slack pairs
};

SdpaProblem import_problem_sdpa(std::istream& in);
SdpaProblem import_problem_sdpa_file(const std::string& path);

// Standard SDPA output layout: phase.value, objective lines, xVec, xMat, yMat.
void write_solution_sdpa(const SdpaProblem& layout, const ConicSolution& sol,
                         std::ostream& out);

// Reads an SDPA output file produced for export_sdpa(p): primal v from xVec,
// block duals from yMat, equality multipliers from the trailing diagonal pair.
ConicSolution import_solution_sdpa(std::istream& in, const ConicProgram& p);
ConicSolution import_solution_sdpa_file(const std::string& path, const ConicProgram& p);

}  // namespace mocp

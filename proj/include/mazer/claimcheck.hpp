#ifndef MAZER_CLAIMCHECK_HPP
#define MAZER_CLAIMCHECK_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mazer/dressed.hpp"
#include "mazer/modefn.hpp"

namespace mazer {

// Numerical adjudication of the dressed-state identities and of the
// claim that the derivative-coupling terms vanish.  Every report is
// reproducible: it records the seed and the worst-case inputs, and
// re-evaluating the residual at the witness reproduces the maximum.

enum class VerdictKind { Holds, Fails, HoldsOnlyWhen };

struct Verdict {
    VerdictKind kind = VerdictKind::Holds;
    std::string condition;  // set for HoldsOnlyWhen

    static Verdict holds() { return {VerdictKind::Holds, {}}; }
    static Verdict fails() { return {VerdictKind::Fails, {}}; }
    static Verdict holds_only_when(std::string cond) {
        return {VerdictKind::HoldsOnlyWhen, std::move(cond)};
    }
};

struct ClaimReport {
    std::string claim_id;
    long samples = 0;
    long excluded = 0;          // degenerate samples skipped by contract
    double max_abs_residual = 0.0;
    double tolerance = 0.0;
    Verdict verdict;
    std::vector<std::pair<std::string, double>> witness;  // worst-case inputs & diagnostics
    std::uint64_t seed = 0;
    std::string note;           // extra human-readable context
};

// Mixing-angle route vs closed trigonometric formulas, random u in (0, 2].
ClaimReport verify_trig_identities(const ManifoldParams& p, long sample_count,
                                   std::uint64_t seed);

// Finite differences of the dressed vectors along z vs the closed
// relations dPhi+- = +-Phi-+ th' and d2Phi+- = +-Phi-+ th'' - Phi+- th'^2.
ClaimReport verify_derivative_relations(const ManifoldParams& p, const ModeExpr& mode,
                                        long sample_count, std::uint64_t seed);

// th' and th'' vanish identically on a constant profile.  Passing a
// non-constant mode demonstrates the check fails when it should.
ClaimReport verify_mesa_decoupling(const ManifoldParams& p, const ModeExpr& mode, double L);

// Magnitudes of the derivative-coupling terms along a converged
// dressed-basis solution, measured against the kinetic-term scale.
ClaimReport verify_vanishing_claim(const ManifoldParams& p, const ModeExpr& mode,
                                   double k, double L, std::uint64_t seed);

// Adiabatic (derived variant) vs diabatic solver probabilities; also
// records the literal variant's deviations and flux errors.
ClaimReport verify_solver_equivalence(const ManifoldParams& p, const ModeExpr& mode,
                                      double k, double L);

// All five checks in deterministic claim_id order.  The constant-mode
// decoupling claim always runs on the mesa profile (that is its
// subject); the others use `mode`.
std::vector<ClaimReport> run_all_claims(const ManifoldParams& p, const ModeExpr& mode,
                                        double k, double L, long sample_count,
                                        std::uint64_t seed);

std::string to_text(const ClaimReport& report, bool color);
std::string claim_csv_header();
std::string to_csv_row(const ClaimReport& report);

}  // namespace mazer

#endif

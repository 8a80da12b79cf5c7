#pragma once

#include <string>
#include <vector>

// The project's verification gate: every check pins its tolerances in code
// and reports one pass/fail line. Oracles here (step-by-step recurrence,
// exhaustive strategy enumeration, brute-force metric counting) are written
// against the definitions, not against the implementations they vet.
namespace dsdkit::selfcheck {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

CheckResult check_scan_oracle();          // 100 random configs vs recurrence
CheckResult check_complexity();           // linear scan vs quadratic attention
CheckResult check_cl_exactness();         // Q identities + strategy brute force
CheckResult check_alpha_zero_reduction(); // alpha=0 pipeline == plain CL
CheckResult check_trcl_directional();     // TRCL >= CL on burst noise, 20 seeds
CheckResult check_alpha_ablation();       // deterministic 4-point alpha sweep
CheckResult check_forward_integrity();    // shapes, determinism, residuals, counts
CheckResult check_metrics_oracle();       // closed forms vs counting, 1000 cases
CheckResult check_format_roundtrips();    // CSV/JSON/tensor byte stability

// Cheap structural invariants not covered by the criteria above.
CheckResult check_permutations();
CheckResult check_scan_stability();
CheckResult check_kernel_parity();        // omp kernels == serial reference

std::vector<CheckResult> run_all();

}  // namespace dsdkit::selfcheck

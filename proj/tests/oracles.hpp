#pragma once

// Reference values for the unit-gap lattice with u = 0, frozen from a 30-digit
// mpmath evaluation, plus the partial sums that reproduce them.

#include <cmath>

namespace oracle {

inline constexpr double lattice_exit = 1.16395341373865284877;     // 2/(e-1)
inline constexpr double lattice_p_nn = 0.316060279414278839202;    // e^-1 (e-1)/2
inline constexpr double lattice_d_y = 3.42332389528491106228;      // 2 sum k^2 e^-k / exit
inline constexpr double lattice_d_x = 3.98458953424997478585;      // 2 sum k^2 e^-k
inline constexpr double lattice_v_y_03 = 1.06130694503825871305;
inline constexpr double lattice_v_x_03 = 1.44450708354238287189;
inline constexpr double lattice_v_y_05 = 1.94015763904876445289;
inline constexpr double shifted_exp_mgf_1_2_at_1 = 5.43656365691809047072;  // 2e
inline constexpr double pareto_mgf_1_3_at_m1 = 0.258187473973682184757;     // 3 E_4(1)
inline constexpr double pareto_mgf_1_3_at_m2 = 0.0750685236409809055190;    // 3 E_4(2)

struct LatticeSums {
    long double exit = 0;
    long double second_moment = 0;  // sum over both sides of k^2 e^-k
};

inline LatticeSums lattice_partial_sums(int terms = 200) {
    LatticeSums s;
    for (int k = terms; k >= 1; --k) {
        const long double w = std::exp(-static_cast<long double>(k));
        s.exit += 2 * w;
        s.second_moment += 2 * static_cast<long double>(k) * k * w;
    }
    return s;
}

// v_Y of the tilted lattice from the direct series
inline long double lattice_v_y(long double lambda, int terms = 400) {
    long double num = 0;
    long double den = 0;
    for (int k = terms; k >= 1; --k) {
        const long double up = std::exp(-(1 - lambda) * k);
        const long double down = std::exp(-(1 + lambda) * k);
        num += k * (up - down);
        den += up + down;
    }
    return num / den;
}

}  // namespace oracle

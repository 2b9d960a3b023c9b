// Prints k_lower <= i_mid <= c_upper for a doubly symmetric binary source
// along the diagonal D1 = D2 = D.
//
//   dsbs_sandwich [p]

#include <cstdio>
#include <cstdlib>

#include <lossyci/theorem.hpp>

int main(int argc, char** argv) {
    using namespace lossyci;
    const double p = argc > 1 ? std::atof(argv[1]) : 0.1;
    const Alphabet bit = Alphabet::indexed(2);
    const auto src = JointDistribution::validate({0.5 * (1 - p), 0.5 * p, 0.5 * p, 0.5 * (1 - p)}, {{"X1", bit}, {"X2", bit}});
    const auto h = DistortionMeasure::hamming(bit);

    std::printf("DSBS(%.3f): I(X1;X2) = %.6f\n", p, mutual_information(src, "X1", "X2"));
    std::printf("%6s %10s %10s %10s %10s %s\n", "D", "k_lower", "i_mid", "c_upper", "I(Z;U|X)", "certified");
    for (double d : {0.0, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3}) {
        const auto r = sandwich_check(src, h, h, d, d);
        std::printf("%6.3f %10.6f %10.6f %10.6f %10.2e %s\n", d, r.k_lower, r.i_mid, r.c_upper,
                    r.residuals.at("encoder.z_x_u"), r.feasible ? "yes" : "no");
    }
}

// The sequence-space operator under which the multiscale sums diverge:
// residuals go to zero while ||sigma_n||_1 grows like the harmonic series.
//
//   divergent_sequence [M=2] [steps=12]

#include "msdecomp/seqspace.hpp"

#include <cstdio>
#include <string>

using namespace msdecomp;
using namespace msdecomp::seqspace;

int main(int argc, char** argv) {
    const SequenceParams p = params_from(parse_rational(argc > 1 ? argv[1] : "2"), Rational(1));
    const std::size_t steps = argc > 2 ? std::stoul(argv[2]) : 12;

    std::printf("M = %s  delta = %s  b = %s\n", to_string(p.M).c_str(), to_string(p.delta).c_str(),
                to_string(p.b).c_str());
    std::printf("%4s %6s %14s %14s %s\n", "n", "index", "||sigma_n||_1", "||v_n||^2", "certified");
    for (std::size_t n = 0; n <= steps; ++n) {
        const EtaSeries v = residual_series(n + 2, p, Variant::first);
        const MinimizerCertificate c = certify_iterate(n, p, Variant::first);
        std::printf("%4zu %6zu %14.6e %14.6e %s\n", n, n + 2, sigma_l1_norm(n, p).get_d(),
                    eta_inner(v, v, p).get_d(), c.holds ? "yes" : "NO");
    }
    return 0;
}

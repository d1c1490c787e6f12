// Regenerates the golden spectrum files under tests/golden from the library.
// Run from the repository root after any intentional physics change, then
// review the diff before committing.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "wqed/builders.hpp"
#include "wqed/io.hpp"
#include "wqed/spectral.hpp"

using namespace wqed;

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : "tests/golden/fig1c_full_ed.csv";

    ArrayParams p;
    p.n_sites = 12;
    p.gamma0 = 1.0;
    p.omega = 1.0;
    p.phi = M_PI / 50.0;
    p.eta = M_PI / 50.0;

    const Spectrum spec = eigendecompose(build_full(p, TruncationPolicy{}));

    // polariton-sector states (zero-phonon weight above 1/2), six smallest
    // decay rates, listed by ascending real part
    std::vector<int> keep;
    for (int i = 0; i < spec.dim(); ++i)
        if (spec.vectors.col(i).head(p.n_sites).squaredNorm() > 0.5) keep.push_back(i);
    std::sort(keep.begin(), keep.end(), [&](int a, int b) {
        if (spec.decay(a) != spec.decay(b)) return spec.decay(a) < spec.decay(b);
        return a < b;
    });
    keep.resize(6);
    std::sort(keep.begin(), keep.end(), [&](int a, int b) {
        if (spec.values[a].real() != spec.values[b].real())
            return spec.values[a].real() < spec.values[b].real();
        return a < b;
    });

    std::string text = "re,im\n";
    for (int i : keep)
        text += format_double(spec.values[i].real()) + "," +
                format_double(spec.values[i].imag()) + "\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) {
        std::fprintf(stderr, "cannot open %s for writing\n", path.c_str());
        return 1;
    }
    f << text;
    f.close();
    std::printf("wrote %s (%zu bytes)\n", path.c_str(), text.size());
    return 0;
}

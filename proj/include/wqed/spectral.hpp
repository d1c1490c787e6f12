#pragma once
#include <vector>
#include "wqed/builders.hpp"

namespace wqed {

/// Full right eigensystem of a dense non-Hermitian matrix. Eigenvalues are
/// sorted by ascending real part (ties by imaginary part); vectors have unit
/// Euclidean norm with the largest-magnitude component rotated real positive;
/// residuals[j] = ||M v_j - lambda_j v_j||_2, verified against tol*||M||_F.
struct Spectrum {
    CVec values;
    CMat vectors;
    Eigen::VectorXd residuals;
    std::string source_label;
    int dim() const { return static_cast<int>(values.size()); }
    double decay(int j) const { return -values[j].imag(); }
};

struct SubradiantCriterion {
    enum Kind { Count, DecayThreshold } kind = Count;
    int count = 0;
    double gamma_cut = 0.0;
    static SubradiantCriterion by_count(int m) { return {Count, m, 0.0}; }
    static SubradiantCriterion by_decay(double cut) { return {DecayThreshold, 0, cut}; }
};

/// Indices into a Spectrum, sorted by ascending real part.
struct SubradiantSet {
    std::vector<int> indices;
    SubradiantCriterion criterion;
};

struct Gap {
    double lower = 0.0;    // top of the band below
    double upper = 0.0;    // bottom of the band above
    double width = 0.0;
    double midpoint = 0.0;
    double rho = 0.0;      // states below / n_total
};

struct BandSegmentation {
    std::vector<std::pair<int, int>> bands;  // inclusive index ranges into the sorted array
    std::vector<Gap> gaps;
    double median_spacing = 0.0;
};

Spectrum eigendecompose(const ComplexMatrix& mat, double tol = 1e-8);

SubradiantSet select_subradiant(const Spectrum& spec, const SubradiantCriterion& crit);

// Gap wherever a nearest-neighbour spacing exceeds gap_factor times the median
// spacing. Spacings below min_spacing are ignored when forming the median
// (degeneracy guard); 0 disables the filter. energies must be sorted ascending.
BandSegmentation segment_bands(const std::vector<double>& energies, double gap_factor,
                               int n_total, double min_spacing = 0.0);

} // namespace wqed

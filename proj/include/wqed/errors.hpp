#pragma once
#include <stdexcept>
#include <string>

namespace wqed {

// Exit-code families: 2 = validation / configuration, 3 = numeric failure.
struct Error : std::runtime_error {
    std::string kind;
    int exit_code;
    Error(std::string k, const std::string& msg, int code)
        : std::runtime_error(k + ": " + msg), kind(std::move(k)), exit_code(code) {}
};

inline Error validation_error(const std::string& m) { return Error("ValidationError", m, 2); }
inline Error parse_error(const std::string& m) { return Error("ParseError", m, 2); }
inline Error refused_overwrite(const std::string& m) { return Error("RefusedOverwrite", m, 2); }
inline Error io_error(const std::string& m) { return Error("IoError", m, 2); }

inline Error divergent_dispersion(const std::string& m) { return Error("DivergentDispersion", m, 3); }
inline Error no_bracket(const std::string& m) { return Error("NoBracket", m, 3); }
inline Error dimension_overflow(const std::string& m) { return Error("DimensionOverflow", m, 3); }
inline Error convergence_failure(const std::string& m) { return Error("ConvergenceFailure", m, 3); }
inline Error residual_exceeded(const std::string& m) { return Error("ResidualExceeded", m, 3); }
inline Error empty_selection(const std::string& m) { return Error("EmptySelection", m, 3); }
inline Error degenerate_basis(const std::string& m) { return Error("DegenerateBasis", m, 3); }
inline Error stripe_not_found(const std::string& m) { return Error("StripeNotFound", m, 3); }
inline Error not_normalized(const std::string& m) { return Error("NotNormalized", m, 3); }
inline Error too_few_levels(const std::string& m) { return Error("TooFewLevels", m, 3); }
inline Error degenerate_fit(const std::string& m) { return Error("DegenerateFit", m, 3); }

} // namespace wqed

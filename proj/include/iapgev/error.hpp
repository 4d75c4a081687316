#pragma once

#include <stdexcept>
#include <string>

namespace iapgev {

// Coarse failure classes. The CLI maps them onto its exit codes.
enum class ErrorCategory {
    config,     // bad arguments, shapes, parameters, structures
    data,       // files, schemas, parse and validation failures
    numerical,  // divergence, infeasible filters, degenerate sets
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define IAPGEV_DEFINE_ERROR(Name, Category)                                  \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(Category, what) {}    \
    }

IAPGEV_DEFINE_ERROR(ShapeError, ErrorCategory::config);
IAPGEV_DEFINE_ERROR(IndexError, ErrorCategory::config);
IAPGEV_DEFINE_ERROR(ParameterError, ErrorCategory::config);
IAPGEV_DEFINE_ERROR(StructureError, ErrorCategory::config);
IAPGEV_DEFINE_ERROR(ContractError, ErrorCategory::config);
IAPGEV_DEFINE_ERROR(ConfigError, ErrorCategory::config);
IAPGEV_DEFINE_ERROR(UnsupportedCheckError, ErrorCategory::config);

IAPGEV_DEFINE_ERROR(DataError, ErrorCategory::data);
IAPGEV_DEFINE_ERROR(SchemaError, ErrorCategory::data);
IAPGEV_DEFINE_ERROR(ParseError, ErrorCategory::data);
IAPGEV_DEFINE_ERROR(ValidationError, ErrorCategory::data);
IAPGEV_DEFINE_ERROR(VersionError, ErrorCategory::data);
IAPGEV_DEFINE_ERROR(SpecError, ErrorCategory::data);

IAPGEV_DEFINE_ERROR(DegenerateChoiceSetError, ErrorCategory::numerical);
IAPGEV_DEFINE_ERROR(FilterInfeasibleError, ErrorCategory::numerical);
IAPGEV_DEFINE_ERROR(NumericalError, ErrorCategory::numerical);

#undef IAPGEV_DEFINE_ERROR

class DivergenceError : public Error {
public:
    DivergenceError(std::size_t iteration, const std::string& what)
        : Error(ErrorCategory::numerical, what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace iapgev

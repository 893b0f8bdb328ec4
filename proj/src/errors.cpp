#include "emx/errors.hpp"

#include <sstream>

namespace emx {

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

NonZeroMean::NonZeroMean(double mean_, double tol_)
    : Error("NonZeroMean", "source has non-zero mean " + fmt_double(mean_) +
                               " (tolerance " + fmt_double(tol_) + ")"),
      mean(mean_), tol(tol_) {}

InvalidDoping::InvalidDoping(double min_b_)
    : Error("InvalidDoping",
            "doping profile must be strictly positive (min b = " + fmt_double(min_b_) + ")"),
      min_b(min_b_) {}

NoConvergence::NoConvergence(int iterations_, double residual_, const std::string& why)
    : Error("NoConvergence", "equilibrium solver did not converge after " +
                                 std::to_string(iterations_) + " iterations (residual " +
                                 fmt_double(residual_) + ")" + (why.empty() ? "" : ": " + why)),
      iterations(iterations_), residual(residual_) {}

PositivityViolation::PositivityViolation(std::string field_, std::size_t index_, double value_,
                                         double floor_)
    : Error("PositivityViolation", "positivity floor violated: " + field_ + "[" +
                                       std::to_string(index_) + "] = " + fmt_double(value_) +
                                       " < " + fmt_double(floor_)),
      field(std::move(field_)), index(index_), value(value_), floor(floor_) {}

NumericalBlowup::NumericalBlowup(double norm_, double reference_)
    : Error("NumericalBlowup", "state norm " + fmt_double(norm_) + " exceeds 1e6 x initial " +
                                   fmt_double(reference_)),
      norm(norm_), reference(reference_) {}

NonNeutral::NonNeutral(double mean_)
    : Error("NonNeutral", "Gauss-law source has non-zero mean " + fmt_double(mean_)),
      mean(mean_) {}

InsufficientData::InsufficientData(std::size_t have, std::size_t need)
    : Error("InsufficientData", "need at least " + std::to_string(need) +
                                    " samples in window, have " + std::to_string(have)) {}

NonPositiveValue::NonPositiveValue(double t, double value)
    : Error("NonPositiveValue",
            "series value " + fmt_double(value) + " at t = " + fmt_double(t) + " is not positive") {}

ParseError::ParseError(int line_, std::string key_, const std::string& message)
    : Error("ParseError", "line " + std::to_string(line_) +
                              (key_.empty() ? "" : " (key '" + key_ + "')") + ": " + message),
      line(line_), key(std::move(key_)) {}

ValidationError::ValidationError(std::string key_, std::string constraint_)
    : Error("ValidationError", "invalid value for '" + key_ + "': must be " + constraint_),
      key(std::move(key_)), constraint(std::move(constraint_)) {}

StepFailure::StepFailure(std::size_t step_, const Error& cause)
    : Error(cause.kind(), "step " + std::to_string(step_) + ": " + cause.what()),
      step(step_), cause_kind(cause.kind()) {}

}  // namespace emx

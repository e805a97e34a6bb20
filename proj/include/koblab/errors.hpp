#ifndef KOBLAB_ERRORS_HPP
#define KOBLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace koblab {

// Base class for all failures raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularMetric : Error {
    explicit SingularMetric(const std::string& msg) : Error("SingularMetric: " + msg) {}
};

struct OutOfChart : Error {
    explicit OutOfChart(const std::string& msg) : Error("OutOfChart: " + msg) {}
};

struct DegeneratePlane : Error {
    explicit DegeneratePlane(const std::string& msg) : Error("DegeneratePlane: " + msg) {}
};

struct LeftChart : Error {
    explicit LeftChart(const std::string& msg) : Error("LeftChart: " + msg) {}
};

struct ReducedStepExhausted : Error {
    explicit ReducedStepExhausted(const std::string& msg) : Error("ReducedStepExhausted: " + msg) {}
};

struct NotImmersion : Error {
    explicit NotImmersion(const std::string& msg) : Error("NotImmersion: " + msg) {}
};

struct NonpositiveScale : Error {
    explicit NonpositiveScale(const std::string& msg) : Error("NonpositiveScale: " + msg) {}
};

struct JetDrift : Error {
    explicit JetDrift(const std::string& msg) : Error("JetDrift: " + msg) {}
};

struct NoAdmissibleDisc : Error {
    explicit NoAdmissibleDisc(const std::string& msg) : Error("NoAdmissibleDisc: " + msg) {}
};

struct Disconnected : Error {
    explicit Disconnected(const std::string& msg) : Error("Disconnected: " + msg) {}
};

struct PinchNotCertified : Error {
    explicit PinchNotCertified(const std::string& msg) : Error("PinchNotCertified: " + msg) {}
};

struct NoScaleFound : Error {
    explicit NoScaleFound(const std::string& msg) : Error("NoScaleFound: " + msg) {}
};

struct ClaimFailure : Error {
    explicit ClaimFailure(const std::string& msg) : Error("ClaimFailure: " + msg) {}
};

struct CertificateFailure : Error {
    explicit CertificateFailure(const std::string& msg) : Error("CertificateFailure: " + msg) {}
};

struct WitnessInvalid : Error {
    explicit WitnessInvalid(const std::string& msg) : Error("WitnessInvalid: " + msg) {}
};

struct ExtractionFailed : Error {
    explicit ExtractionFailed(const std::string& msg) : Error("ExtractionFailed: " + msg) {}
};

struct ABudgetExceeded : Error {
    explicit ABudgetExceeded(const std::string& msg) : Error("ABudgetExceeded: " + msg) {}
};

struct ChartTooSmall : Error {
    explicit ChartTooSmall(const std::string& msg) : Error("ChartTooSmall: " + msg) {}
};

struct PreconditionFailed : Error {
    explicit PreconditionFailed(const std::string& msg) : Error("PreconditionFailed: " + msg) {}
};

struct SpecParseError : Error {
    explicit SpecParseError(const std::string& msg) : Error("SpecParseError: " + msg) {}
};

} // namespace koblab

#endif

// errors.hpp
// Exception types thrown across the library. Every failure that a caller can
// provoke maps to one of these; internal consistency failures use AmbiguousCoding
// and friends so they can be told apart in tests.
#pragma once

#include <stdexcept>
#include <string>

namespace iqm {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define IQM_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& what) : Error(what) {}     \
    }

IQM_DEFINE_ERROR(UnknownWorld);
IQM_DEFINE_ERROR(InvalidGenerationParams);
IQM_DEFINE_ERROR(ExemplarAlreadyConsumed);
IQM_DEFINE_ERROR(IncompatibleMeasurementSpec);
IQM_DEFINE_ERROR(UncodableMarkSet);
IQM_DEFINE_ERROR(AmbiguousCoding);
IQM_DEFINE_ERROR(NonPositiveFlightTime);
IQM_DEFINE_ERROR(NonScalarSpectrum);
IQM_DEFINE_ERROR(EmptyTable);
IQM_DEFINE_ERROR(EmptyViewSet);
IQM_DEFINE_ERROR(NonProductUniverse);
IQM_DEFINE_ERROR(NotComposable);
IQM_DEFINE_ERROR(UnsupportedEnvironment);
IQM_DEFINE_ERROR(NonPositiveSpeed);
IQM_DEFINE_ERROR(MalformedModel);
IQM_DEFINE_ERROR(MissingSeed);

#undef IQM_DEFINE_ERROR

// Config parse failure carrying the JSON path of the offending key.
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace iqm

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snapweight {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NearGeocenter : public Error {
public:
    NearGeocenter() : Error("position is within 1e5 m of the geocenter") {}
};

class ZeroRange : public Error {
public:
    ZeroRange() : Error("satellite coincides with receiver position") {}
};

class MissingClockBias : public Error {
public:
    explicit MissingClockBias(const std::string& constellation)
        : Error("state has no clock bias for constellation " + constellation) {}
};

class SingularGeometry : public Error {
public:
    explicit SingularGeometry(double condition)
        : Error("normal matrix condition number " + std::to_string(condition) +
                " exceeds limit"),
          condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class NotEnoughMeasurements : public Error {
public:
    NotEnoughMeasurements(std::size_t have, std::size_t need)
        : Error("have " + std::to_string(have) + " usable measurements, need " +
                std::to_string(need)),
          have_(have),
          need_(need) {}
    std::size_t have() const noexcept { return have_; }
    std::size_t need() const noexcept { return need_; }

private:
    std::size_t have_;
    std::size_t need_;
};

class NonMonotonicTime : public Error {
public:
    NonMonotonicTime(double previous, double current)
        : Error("epoch time " + std::to_string(current) + " precedes " +
                std::to_string(previous)) {}
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class MissingTruth : public Error {
public:
    MissingTruth() : Error("epoch carries no truth position") {}
};

class EmptySplit : public Error {
public:
    explicit EmptySplit(const std::string& split) : Error("split '" + split + "' is empty") {}
};

class HorizonSingularity : public Error {
public:
    explicit HorizonSingularity(double elevation)
        : Error("elevation " + std::to_string(elevation) + " rad is at or below the mask") {}
};

class ConfigInvalid : public Error {
public:
    ConfigInvalid(std::string field, const std::string& message)
        : Error("invalid config field '" + field + "': " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                message),
          line_(line),
          column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class VersionMismatch : public Error {
public:
    VersionMismatch(int found, int supported)
        : Error("format version " + std::to_string(found) + " is not supported (expected " +
                std::to_string(supported) + ")") {}
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptySamples : public Error {
public:
    EmptySamples() : Error("sample set is empty") {}
};

}  // namespace snapweight

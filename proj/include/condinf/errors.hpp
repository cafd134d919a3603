#pragma once

#include <stdexcept>
#include <string>

// Exception taxonomy for the whole library. Each estimator / engine error
// the callers are expected to distinguish gets its own type.

namespace condinf {

struct NotPositiveSemiDefinite : std::runtime_error {
    explicit NotPositiveSemiDefinite(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

struct SingularSecondMoment : std::runtime_error {
    explicit SingularSecondMoment(const std::string& what) : std::runtime_error(what) {}
};

struct SingularVariance : std::runtime_error {
    explicit SingularVariance(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyGrid : std::invalid_argument {
    explicit EmptyGrid(const std::string& what) : std::invalid_argument(what) {}
};

struct BadMeasure : std::invalid_argument {
    explicit BadMeasure(const std::string& what) : std::invalid_argument(what) {}
};

struct EmptyList : std::invalid_argument {
    explicit EmptyList(const std::string& what) : std::invalid_argument(what) {}
};

struct BadParams : std::invalid_argument {
    explicit BadParams(const std::string& what) : std::invalid_argument(what) {}
};

struct EmptyArm : std::runtime_error {
    explicit EmptyArm(const std::string& what) : std::runtime_error(what) {}
};

struct WeakFirstStage : std::runtime_error {
    explicit WeakFirstStage(const std::string& what) : std::runtime_error(what) {}
};

struct RankDeficient : std::runtime_error {
    explicit RankDeficient(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateRegressor : std::runtime_error {
    explicit DegenerateRegressor(const std::string& what) : std::runtime_error(what) {}
};

struct AllReplicationsInvalid : std::runtime_error {
    explicit AllReplicationsInvalid(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& what, int line_, int column_)
        : std::runtime_error(what + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(column_) + ")"),
          line(line_),
          column(column_) {}
};

struct ValidationError : std::runtime_error {
    std::string key;
    ValidationError(const std::string& key_, const std::string& what)
        : std::runtime_error(key_.empty() ? what : key_ + ": " + what), key(key_) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace condinf

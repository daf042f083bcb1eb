#pragma once
#include <stdexcept>
#include <string>

namespace mpm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad input or configuration: the caller asked for something ill-posed.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A computation could not be carried out on otherwise valid input.
class NumericError : public Error {
  public:
    using Error::Error;
};

#define MPM_DEFINE_ERROR(Name, Base)                                                             \
    class Name : public Base {                                                                   \
      public:                                                                                    \
        explicit Name(const std::string &what) : Base(std::string(#Name ": ") + what) {}         \
    }

// model space
MPM_DEFINE_ERROR(InvalidClass, ConfigError);
MPM_DEFINE_ERROR(NotInClass, NumericError);
MPM_DEFINE_ERROR(NotNormalized, ConfigError);
MPM_DEFINE_ERROR(EmptyModel, ConfigError);

// linear numerics
MPM_DEFINE_ERROR(RankDeficient, NumericError);
MPM_DEFINE_ERROR(ConditionViolated, NumericError);
MPM_DEFINE_ERROR(ImproperMarginal, ConfigError);
MPM_DEFINE_ERROR(DimensionMismatch, ConfigError);
MPM_DEFINE_ERROR(NotPositiveDefinite, NumericError);

// posterior probabilities
MPM_DEFINE_ERROR(MixedConstants, ConfigError);
MPM_DEFINE_ERROR(NoValidTrainingSamples, NumericError);
MPM_DEFINE_ERROR(InsufficientData, ConfigError);
MPM_DEFINE_ERROR(EmptyLog, ConfigError);
MPM_DEFINE_ERROR(WrongClass, ConfigError);

// geometry
MPM_DEFINE_ERROR(Degenerate, NumericError);

// ingestion
MPM_DEFINE_ERROR(ParseError, ConfigError);
MPM_DEFINE_ERROR(NonNumericCell, ConfigError);
MPM_DEFINE_ERROR(DuplicateHeader, ConfigError);

#undef MPM_DEFINE_ERROR

} // namespace mpm

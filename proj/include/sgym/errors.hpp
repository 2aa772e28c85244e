#pragma once

#include <stdexcept>
#include <string>

namespace sgym {

// Exit-code buckets used by the CLI: config=2, data=3, training=4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct TrainError : Error {
    using Error::Error;
};

// marketdata
struct MalformedRow : DataError {
    size_t line;
    MalformedRow(size_t line_no, const std::string& what)
        : DataError("malformed row at line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
};
struct NonMonotoneTime : DataError {
    using DataError::DataError;
};
struct EmptyStream : DataError {
    using DataError::DataError;
};
struct NonPositiveBase : DataError {
    using DataError::DataError;
};
struct InvalidFloat : DataError {
    using DataError::DataError;
};
struct InsufficientHistory : DataError {
    using DataError::DataError;
};

// epfilter
struct TooFewEpisodes : DataError {
    using DataError::DataError;
};

// gym
struct EpisodeTooShort : DataError {
    using DataError::DataError;
};
struct InsufficientFuture : DataError {
    using DataError::DataError;
};
struct WrongAgent : Error {
    using Error::Error;
};
struct SteppedAfterDone : Error {
    using Error::Error;
};

// nn
struct ShapeMismatch : Error {
    using Error::Error;
};
struct NonFiniteLoss : TrainError {
    using TrainError::TrainError;
};

// agents
struct OutOfWindow : DataError {
    using DataError::DataError;
};
struct EmptyDataset : TrainError {
    using TrainError::TrainError;
};
struct EmptyBatch : TrainError {
    using TrainError::TrainError;
};
struct MissingPretrain : TrainError {
    using TrainError::TrainError;
};
struct EmptyTrainSet : TrainError {
    using TrainError::TrainError;
};

// eval
struct EmptyResults : DataError {
    using DataError::DataError;
};
struct SigmaZero : DataError {
    using DataError::DataError;
};
struct ZeroDrawdown : DataError {
    using DataError::DataError;
};

// cli
struct IoFailure : DataError {
    using DataError::DataError;
};

}  // namespace sgym

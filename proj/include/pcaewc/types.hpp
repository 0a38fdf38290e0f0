#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pcaewc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct ZeroVarianceColumn : Error {
    Index column;
    explicit ZeroVarianceColumn(Index col)
        : Error("column " + std::to_string(col) + " has zero variance"), column(col) {}
};

struct RankDeficient : Error {
    using Error::Error;
};

struct NonPositivePrior : Error {
    using Error::Error;
};

struct SvdFailure : Error {
    using Error::Error;
};

struct SingularScoreCovariance : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct DegenerateSample : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct OnsetOutOfRange : Error {
    using Error::Error;
};

struct UnknownDataId : Error {
    using Error::Error;
};

struct SpecOutOfRange : Error {
    using Error::Error;
};

struct UnknownScenario : Error {
    using Error::Error;
};

struct IoFailure : Error {
    using Error::Error;
};

struct ModelFileCorrupt : Error {
    using Error::Error;
};

struct ModeOrderViolation : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// N x m block of process measurements, one sample per row.
struct DataMatrix {
    Matrix values;

    DataMatrix() = default;
    explicit DataMatrix(Matrix v) : values(std::move(v)) {
        if (values.rows() < 2 || values.cols() < 1)
            throw DimensionMismatch("DataMatrix needs at least 2 samples and 1 variable");
        if (!values.allFinite())
            throw DimensionMismatch("DataMatrix entries must be finite");
    }

    Index n_samples() const { return values.rows(); }
    Index n_vars() const { return values.cols(); }
};

/// Per-variable mean / standard deviation used for z-scoring.
struct Scaler {
    Vector mean;
    Vector std;

    Index n_vars() const { return mean.size(); }
};

}  // namespace pcaewc

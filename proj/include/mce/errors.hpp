#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mce {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrix : public Error {
public:
    SingularMatrix() : Error("matrix is not positive definite") {}
    explicit SingularMatrix(const std::string& what) : Error(what) {}
};

class DegenerateWeights : public Error {
public:
    DegenerateWeights() : Error("weighted Gram matrix is not positive definite") {}
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("dataset has no samples") {}
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ZeroRegressor : public Error {
public:
    explicit ZeroRegressor(std::size_t index)
        : Error("regressor " + std::to_string(index) + " is zero"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ZeroDirection : public Error {
public:
    ZeroDirection() : Error("direction vector is zero") {}
};

class AlphaExceedsSigma : public Error {
public:
    AlphaExceedsSigma(double alpha, double sigma)
        : Error("alpha " + std::to_string(alpha) + " exceeds sigma " + std::to_string(sigma)) {}
};

class EmptyGrid : public Error {
public:
    EmptyGrid() : Error("alpha grid is empty") {}
};

class MissingNoiseRecord : public Error {
public:
    MissingNoiseRecord() : Error("dataset carries no noise record") {}
};

}  // namespace mce

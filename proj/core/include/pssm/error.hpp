#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pssm {

enum class ErrorCode {
    NonSquare,
    NoConjugatePair,
    UnstableSpectrum,
    NoBifurcationInRange,
    NoRootBracket,
    SignViolation,
    DefectiveLinearPart,
    EigenvalueCollision,
    ResonantOrder,
    ResonantCoefficient,
    DomainViolation,
    QuadratureFailure,
    SeriesNotConverged,
    BlowUp,
    WrongRegime,
    RankDeficient,
    IllConditioned,
    TooShort,
    SubspaceJump,
    KeyMismatch,
    OutOfRange,
    NoSignChange,
    GridMismatch,
    UnknownKind,
    InvalidArgument,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code names the
/// failure class so callers can branch on it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// A cohomological operator L_k became singular at multi-index (k1, k2)
/// against the outer eigenvalue with index `outer`.
class ResonantOrderError : public Error {
public:
    ResonantOrderError(int k1, int k2, int outer, double relative_gap, const std::string& message)
        : Error(ErrorCode::ResonantOrder, message),
          k1_(k1), k2_(k2), outer_(outer), relative_gap_(relative_gap) {}

    int order() const noexcept { return k1_ + k2_; }
    int k1() const noexcept { return k1_; }
    int k2() const noexcept { return k2_; }
    int outer_index() const noexcept { return outer_; }
    double relative_gap() const noexcept { return relative_gap_; }

private:
    int k1_, k2_, outer_;
    double relative_gap_;
};

/// Vanishing denominator 2 k0 mu - sigma in the radial Taylor recursion.
class ResonantCoefficientError : public Error {
public:
    ResonantCoefficientError(int k0, const std::string& message)
        : Error(ErrorCode::ResonantCoefficient, message), k0_(k0) {}

    int k0() const noexcept { return k0_; }

private:
    int k0_;
};

}  // namespace pssm

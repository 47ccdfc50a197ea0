#include "pssm/error.hpp"

namespace pssm {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonSquare: return "NonSquare";
        case ErrorCode::NoConjugatePair: return "NoConjugatePair";
        case ErrorCode::UnstableSpectrum: return "UnstableSpectrum";
        case ErrorCode::NoBifurcationInRange: return "NoBifurcationInRange";
        case ErrorCode::NoRootBracket: return "NoRootBracket";
        case ErrorCode::SignViolation: return "SignViolation";
        case ErrorCode::DefectiveLinearPart: return "DefectiveLinearPart";
        case ErrorCode::EigenvalueCollision: return "EigenvalueCollision";
        case ErrorCode::ResonantOrder: return "ResonantOrder";
        case ErrorCode::ResonantCoefficient: return "ResonantCoefficient";
        case ErrorCode::DomainViolation: return "DomainViolation";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::SeriesNotConverged: return "SeriesNotConverged";
        case ErrorCode::BlowUp: return "BlowUp";
        case ErrorCode::WrongRegime: return "WrongRegime";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::SubspaceJump: return "SubspaceJump";
        case ErrorCode::KeyMismatch: return "KeyMismatch";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NoSignChange: return "NoSignChange";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::UnknownKind: return "UnknownKind";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace pssm

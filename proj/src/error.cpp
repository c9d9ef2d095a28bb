#include "hemlr/error.hpp"

namespace hemlr {

    std::string_view to_string(ErrorKind kind) {
        switch (kind) {
            case ErrorKind::MalformedRow: return "MalformedRow";
            case ErrorKind::NonIntegerLabel: return "NonIntegerLabel";
            case ErrorKind::EmptyFile: return "EmptyFile";
            case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
            case ErrorKind::FileNotFound: return "FileNotFound";
            case ErrorKind::DimensionMismatch: return "DimensionMismatch";
            case ErrorKind::DegenerateLikelihood: return "DegenerateLikelihood";
            case ErrorKind::SingularSystem: return "SingularSystem";
            case ErrorKind::InvalidArgument: return "InvalidArgument";
            case ErrorKind::PayloadTooLarge: return "PayloadTooLarge";
            case ErrorKind::LevelMismatch: return "LevelMismatch";
            case ErrorKind::ScaleMismatch: return "ScaleMismatch";
            case ErrorKind::LevelExhausted: return "LevelExhausted";
            case ErrorKind::NothingToRescale: return "NothingToRescale";
            case ErrorKind::MatrixTooWide: return "MatrixTooWide";
            case ErrorKind::MultiCiphertextUnsupported: return "MultiCiphertextUnsupported";
            case ErrorKind::BothOrNeitherTransposed: return "BothOrNeitherTransposed";
            case ErrorKind::CapacityExceeded: return "CapacityExceeded";
        }
        return "Unknown";
    }

    Error::Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {
    }

}  // namespace hemlr

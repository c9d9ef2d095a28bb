#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hemlr {

    enum class ErrorKind {
        // data ingest
        MalformedRow,
        NonIntegerLabel,
        EmptyFile,
        LabelOutOfRange,
        FileNotFound,
        // linear algebra / model
        DimensionMismatch,
        DegenerateLikelihood,
        SingularSystem,
        InvalidArgument,
        // emulator
        PayloadTooLarge,
        LevelMismatch,
        ScaleMismatch,
        LevelExhausted,
        NothingToRescale,
        // packing
        MatrixTooWide,
        MultiCiphertextUnsupported,
        BothOrNeitherTransposed,
        CapacityExceeded,
    };

    std::string_view to_string(ErrorKind kind);

    class Error : public std::runtime_error {
    public:
        Error(ErrorKind kind, const std::string &what);

        ErrorKind kind() const noexcept {
            return kind_;
        }

    private:
        ErrorKind kind_;
    };

}  // namespace hemlr

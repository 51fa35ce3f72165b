#pragma once

#include <stdexcept>
#include <string>

namespace cdc {

enum class errc {
    invalid_argument,
    zero_vector,
    dimension_mismatch,
    non_positive_temperature,
    invalid_simplex,
    domain_error,
    too_few_templates,
    non_finite_loss,
    total_conflict,
    empty_dataset,
    empty_partition,
    dimension_too_small,
    malformed_header,
    unknown_split_tag,
    truncated_file,
    unknown_class,
    io_failure,
    bad_checkpoint,
    incompatible,
};

inline const char* errc_name(errc code) {
    switch (code) {
        case errc::invalid_argument: return "InvalidArgument";
        case errc::zero_vector: return "ZeroVector";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::non_positive_temperature: return "NonPositiveTemperature";
        case errc::invalid_simplex: return "InvalidSimplex";
        case errc::domain_error: return "DomainError";
        case errc::too_few_templates: return "TooFewTemplates";
        case errc::non_finite_loss: return "NonFiniteLoss";
        case errc::total_conflict: return "TotalConflict";
        case errc::empty_dataset: return "EmptyDataset";
        case errc::empty_partition: return "EmptyPartition";
        case errc::dimension_too_small: return "DimensionTooSmall";
        case errc::malformed_header: return "MalformedHeader";
        case errc::unknown_split_tag: return "UnknownSplitTag";
        case errc::truncated_file: return "TruncatedFile";
        case errc::unknown_class: return "UnknownClass";
        case errc::io_failure: return "IoFailure";
        case errc::bad_checkpoint: return "BadCheckpoint";
        case errc::incompatible: return "Incompatible";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace cdc

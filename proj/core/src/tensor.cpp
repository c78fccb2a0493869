#include "afdc/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace afdc {

namespace {

// Activation tensors are tens of megabytes and are reallocated every batch.
// glibc serves such blocks with mmap and returns them to the kernel on free,
// which costs a page-fault sweep per allocation; keeping freed blocks in the
// arena makes the steady-state allocation cost negligible.
struct ArenaTuning {
    ArenaTuning() {
#if defined(__GLIBC__)
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    }
};
const ArenaTuning g_arena_tuning;

} // namespace

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::DegenerateChord: return "DegenerateChord";
        case ErrorCode::NonPositiveClearance: return "NonPositiveClearance";
        case ErrorCode::SurfaceSplitFailure: return "SurfaceSplitFailure";
        case ErrorCode::PolygonOutOfWindow: return "PolygonOutOfWindow";
        case ErrorCode::GroundContact: return "GroundContact";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::OddSpatialDim: return "OddSpatialDim";
        case ErrorCode::BatchTooSmall: return "BatchTooSmall";
        case ErrorCode::IndivisibleSpatialDims: return "IndivisibleSpatialDims";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::NonPositiveStep: return "NonPositiveStep";
        case ErrorCode::AllSamplesFailed: return "AllSamplesFailed";
        case ErrorCode::TooFewAirfoils: return "TooFewAirfoils";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::EmptySplit: return "EmptySplit";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const char* what) {
    if (t.shape() != shape) {
        std::ostringstream oss;
        oss << what << ": expected shape (";
        for (std::size_t i = 0; i < shape.size(); ++i) oss << (i ? "," : "") << shape[i];
        oss << "), got (";
        for (std::size_t i = 0; i < t.rank(); ++i) oss << (i ? "," : "") << t.shape()[i];
        oss << ")";
        throw Error(ErrorCode::ShapeMismatch, oss.str());
    }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw Error(ErrorCode::ShapeMismatch,
                    std::string(what) + ": expected rank " + std::to_string(rank) +
                        ", got " + std::to_string(t.rank()));
}

namespace {
std::atomic<bool> g_nan_check{false};
}

void set_nan_check(bool enabled) noexcept { g_nan_check.store(enabled); }
bool nan_check_enabled() noexcept { return g_nan_check.load(); }

void debug_check_finite(const Tensor& t, const char* what) {
    if (nan_check_enabled() && !t.all_finite())
        throw Error(ErrorCode::NonFiniteValue, std::string(what) + " produced a non-finite value");
}

} // namespace afdc

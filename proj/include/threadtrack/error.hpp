#pragma once

#include <stdexcept>
#include <string>

namespace threadtrack {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Curve parameter or query argument outside its valid range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Derivative too small to define a direction.
class DegenerateTangentError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit could not be computed (too few samples, rank deficiency,
/// coincident input points).
class FitError : public Error {
public:
    using Error::Error;
};

/// 3D point at or behind the camera plane.
class BehindCameraError : public Error {
public:
    using Error::Error;
};

/// Non-positive disparity or otherwise untriangulatable pixel pair.
class TriangulationError : public Error {
public:
    using Error::Error;
};

/// 2D tracing failed (start point off the mask, malformed input).
class TraceError : public Error {
public:
    using Error::Error;
};

/// Mask contains no traceable thread after preprocessing.
class NoThreadError : public TraceError {
public:
    using TraceError::TraceError;
};

/// Stereo matching produced fewer consistent pairs than required.
class MatchingFailedError : public Error {
public:
    using Error::Error;
};

/// Reconstruction residual exceeded the rejection threshold.
class ReconstructionRejectedError : public Error {
public:
    ReconstructionRejectedError(const std::string& what, double residual)
        : Error(what), residual_px(residual) {}
    double residual_px = 0.0;
};

/// Tracker residual stayed above the lost threshold for too many frames.
class TrackingLostError : public Error {
public:
    TrackingLostError(const std::string& what, double quality)
        : Error(what), quality_px(quality) {}
    double quality_px = 0.0;
};

/// Metric cannot be computed (empty reference mask, size mismatch).
class MetricError : public Error {
public:
    using Error::Error;
};

/// Scene specification invalid, or generated geometry left the camera frustum.
class SceneError : public Error {
public:
    using Error::Error;
};

/// Spline endpoints too close in depth to pick the lifted end.
class AmbiguousEndError : public Error {
public:
    using Error::Error;
};

/// No sufficiently straight run found at the needle end of the thread.
class NotTautError : public Error {
public:
    using Error::Error;
};

/// No sharp bend found past the taut segment.
class ExtractionNotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace threadtrack

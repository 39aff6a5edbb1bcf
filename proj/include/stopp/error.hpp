#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stopp {

enum class Errc {
  EmptyNetwork,
  DegenerateSegment,
  SegmentCrossing,
  InvalidLocation,
  DuplicatePoint,
  PointOutsideDomain,
  SnapFailure,
  EmptyPattern,
  TooFewPoints,
  BadBound,
  InvalidDomain,
  InvalidParams,
  SupercriticalBranching,
  LengthMismatch,
  NonpositiveLambda,
  DomainMismatch,
  RankDeficientDesign,
  NonConvergence,
  GridRefinementFailure,
  WrongKind,
  OptimFailure,
  InsufficientPoints,
  PatternMismatch,
  ParseError,
  IoError,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::EmptyNetwork: return "EmptyNetwork";
    case Errc::DegenerateSegment: return "DegenerateSegment";
    case Errc::SegmentCrossing: return "SegmentCrossing";
    case Errc::InvalidLocation: return "InvalidLocation";
    case Errc::DuplicatePoint: return "DuplicatePoint";
    case Errc::PointOutsideDomain: return "PointOutsideDomain";
    case Errc::SnapFailure: return "SnapFailure";
    case Errc::EmptyPattern: return "EmptyPattern";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::BadBound: return "BadBound";
    case Errc::InvalidDomain: return "InvalidDomain";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::SupercriticalBranching: return "SupercriticalBranching";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonpositiveLambda: return "NonpositiveLambda";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::RankDeficientDesign: return "RankDeficientDesign";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::GridRefinementFailure: return "GridRefinementFailure";
    case Errc::WrongKind: return "WrongKind";
    case Errc::OptimFailure: return "OptimFailure";
    case Errc::InsufficientPoints: return "InsufficientPoints";
    case Errc::PatternMismatch: return "PatternMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code. `index` identifies the
/// offending element (segment, point, ...) when one exists, otherwise -1.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, long index = -1)
      : std::runtime_error(what), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }
  long index() const noexcept { return index_; }

 private:
  Errc code_;
  long index_;
};

}  // namespace stopp

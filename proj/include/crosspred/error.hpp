#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crosspred {

enum class Errc {
  ParseError,
  MissingCell,
  DuplicateKey,
  AssetMismatch,
  LabelMismatch,
  DimensionMismatch,
  NoOverlap,
  DateMisalignment,
  InsufficientHistory,
  CoverageGap,
  TooShort,
  NotSquare,
  ZeroMatrix,
  SingularMoment,
  RankDeficient,
  AllMonthsRankDeficient,
  SingularCovariance,
  NotPsd,
  Config,
};

std::string_view to_string(Errc code);

// CLI exit code for an error category: 2 data, 3 alignment, 4 config, 5 numerical.
int exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::MissingCell: return "MissingCell";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::AssetMismatch: return "AssetMismatch";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NoOverlap: return "NoOverlap";
    case Errc::DateMisalignment: return "DateMisalignment";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::CoverageGap: return "CoverageGap";
    case Errc::TooShort: return "TooShort";
    case Errc::NotSquare: return "NotSquare";
    case Errc::ZeroMatrix: return "ZeroMatrix";
    case Errc::SingularMoment: return "SingularMoment";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::AllMonthsRankDeficient: return "AllMonthsRankDeficient";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::NotPsd: return "NotPsd";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

inline int exit_code(Errc code) {
  switch (code) {
    case Errc::ParseError:
    case Errc::MissingCell:
    case Errc::DuplicateKey:
    case Errc::AssetMismatch:
    case Errc::LabelMismatch:
    case Errc::DimensionMismatch:
      return 2;
    case Errc::NoOverlap:
    case Errc::DateMisalignment:
    case Errc::InsufficientHistory:
    case Errc::CoverageGap:
      return 3;
    case Errc::NotPsd:
    case Errc::Config:
      return 4;
    default:
      return 5;
  }
}

}  // namespace crosspred

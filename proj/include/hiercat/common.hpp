/*
 * Copyright (C) 2026 The hiercat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HIERCAT_COMMON_HPP_
#define HIERCAT_COMMON_HPP_

#include <stdexcept>
#include <string>

namespace hiercat {

enum class Errc {
  MultiParent,
  OrphanNode,
  EmptyInterior,
  LevelGap,
  NotALeaf,
  DuplicateLeaf,
  ZeroVariance,
  ShapeMismatch,
  NonFiniteLoss,
  NonPositivePrediction,
  MissingLeaf,
  NonFiniteEmbedding,
  DimensionMismatch,
  KOutOfRange,
  SingleCluster,
  RankDeficient,
  IrlsDiverged,
  DegenerateFit,
  UnmappedLeaf,
  NotASibling,
  InvalidArgument,
  IoError,
  ParseError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MultiParent: return "MultiParent";
    case Errc::OrphanNode: return "OrphanNode";
    case Errc::EmptyInterior: return "EmptyInterior";
    case Errc::LevelGap: return "LevelGap";
    case Errc::NotALeaf: return "NotALeaf";
    case Errc::DuplicateLeaf: return "DuplicateLeaf";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonPositivePrediction: return "NonPositivePrediction";
    case Errc::MissingLeaf: return "MissingLeaf";
    case Errc::NonFiniteEmbedding: return "NonFiniteEmbedding";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::KOutOfRange: return "KOutOfRange";
    case Errc::SingleCluster: return "SingleCluster";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::IrlsDiverged: return "IrlsDiverged";
    case Errc::DegenerateFit: return "DegenerateFit";
    case Errc::UnmappedLeaf: return "UnmappedLeaf";
    case Errc::NotASibling: return "NotASibling";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Class identity within a hierarchy. Both fields are 1-based, matching the
// on-disk formats: level r in 1..R, index s in 1..n_r.
struct NodeId {
  int level = 0;
  int index = 0;
  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

}  // namespace hiercat

#endif  // HIERCAT_COMMON_HPP_

// Copyright 2026 The leofuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEO_ERRORS_HPP_
#define LEO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace leo {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string & what) : std::runtime_error(what) {}
};

#define LEO_DEFINE_ERROR(NAME)                                    \
  class NAME : public Error {                                     \
   public:                                                        \
    explicit NAME(const std::string & what) : Error(#NAME ": " + what) {} \
  }

// geometry
LEO_DEFINE_ERROR(CollinearPoints);
LEO_DEFINE_ERROR(DegenerateArea);
LEO_DEFINE_ERROR(InvalidGeometry);

// fusion
LEO_DEFINE_ERROR(SingularCovariance);
LEO_DEFINE_ERROR(EmptyInput);
LEO_DEFINE_ERROR(NoAssociableShape);

// simulator / dataset
LEO_DEFINE_ERROR(InvalidConfig);
LEO_DEFINE_ERROR(IoError);
LEO_DEFINE_ERROR(SchemaMismatch);

// graph
LEO_DEFINE_ERROR(WindowSizeMismatch);
LEO_DEFINE_ERROR(SlotGapError);
LEO_DEFINE_ERROR(MissingStats);

// nn
LEO_DEFINE_ERROR(ShapeMismatch);
LEO_DEFINE_ERROR(AllMaskedRow);
LEO_DEFINE_ERROR(NonScalarLoss);
LEO_DEFINE_ERROR(TapeConsumed);
LEO_DEFINE_ERROR(IsolatedNode);

// training / evaluation
LEO_DEFINE_ERROR(EmptyDataset);
LEO_DEFINE_ERROR(NonFiniteLoss);
LEO_DEFINE_ERROR(HashMismatch);

#undef LEO_DEFINE_ERROR

}  // namespace leo

#endif  // LEO_ERRORS_HPP_

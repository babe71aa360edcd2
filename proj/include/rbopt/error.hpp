// Copyright 2026 The rbopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RBOPT_ERROR_HPP
#define RBOPT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbopt {

enum class Errc {
    InvalidArgument,
    InvalidParams,
    ProbabilityOutOfRange,
    LengthNotInModel,
    CompletelyDepolarized,
    SingularMatrix,
    IterationLimit,
    DesignInfeasible,
    NoUsableLengths,
    ZeroEstimator,
    UnsupportedGenerative,
    InsufficientSequences,
    MixtureUndefined,
    NonConvergence,
    NonIdentifiable,
    BootstrapUnstable,
    NotNested,
    Schema,
};

inline std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::InvalidParams: return "InvalidParams";
        case Errc::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
        case Errc::LengthNotInModel: return "LengthNotInModel";
        case Errc::CompletelyDepolarized: return "CompletelyDepolarized";
        case Errc::SingularMatrix: return "SingularMatrix";
        case Errc::IterationLimit: return "IterationLimit";
        case Errc::DesignInfeasible: return "DesignInfeasible";
        case Errc::NoUsableLengths: return "NoUsableLengths";
        case Errc::ZeroEstimator: return "ZeroEstimator";
        case Errc::UnsupportedGenerative: return "UnsupportedGenerative";
        case Errc::InsufficientSequences: return "InsufficientSequences";
        case Errc::MixtureUndefined: return "MixtureUndefined";
        case Errc::NonConvergence: return "NonConvergence";
        case Errc::NonIdentifiable: return "NonIdentifiable";
        case Errc::BootstrapUnstable: return "BootstrapUnstable";
        case Errc::NotNested: return "NotNested";
        case Errc::Schema: return "Schema";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
   public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

   private:
    Errc code_;
};

}  // namespace rbopt

#endif  // RBOPT_ERROR_HPP

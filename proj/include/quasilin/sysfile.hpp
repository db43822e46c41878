// Plain-text description of a control system plus optional companions:
// a candidate conjugacy, a target linear pair, open-loop controls, a
// feedback law, and a pair of autonomous fields.  Line format "key: value",
// '#' starts a comment, repeated keys append components in order.
#pragma once

#include <optional>
#include <string>

#include "quasilin/dyn.hpp"
#include "quasilin/linsys.hpp"
#include "quasilin/system.hpp"

namespace quasilin {

struct SystemFile {
    ControlSystem system;
    std::optional<Conjugation> conjugation;  // chi_I / chi_II / chi_I_inv
    std::optional<LinearPair> target;        // A / B
    std::optional<ExprVec> control;          // expressions in t, one per control
    std::optional<ExprVec> feedback;         // expressions over the states
    std::optional<ExprVec> X1, X2;           // autonomous fields over the states
};

SystemFile parse_system_file(const std::string& text, const std::string& origin = "<memory>");
SystemFile load_system_file(const std::string& path);

}  // namespace quasilin

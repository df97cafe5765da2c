#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "olp/solver.hpp"

namespace olp {

// Game files are JSON documents; see the shipped fixtures for the layout.
// Parse errors and invariant violations raise InvalidInput with a diagnostic.
GameInstance parse_game(const nlohmann::json& j);
GameInstance load_game_file(const std::string& path);

nlohmann::json game_to_json(const GameInstance& game);
void write_game_file(const GameInstance& game, const std::string& path);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const VectorXd& v);

std::string capability_to_json(const Capability& c);

// FNV-1a of the raw file bytes, reported as fixed-width hex.
std::string digest_hex(const std::string& bytes);

// Assembled result envelope; elapsed_ms is zeroed in CI mode (OLP_CI=1).
nlohmann::json make_report(const std::string& command, const std::string& inputs_digest,
                           std::uint64_t seed, nlohmann::json payload, double elapsed_ms);

}  // namespace olp

#include "olp/game_io.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "olp/perception.hpp"

namespace olp {

using nlohmann::json;

namespace {

Capability capability_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return Capability::infinity();
    throw InvalidInput("capability must be a positive integer or \"inf\"");
  }
  if (!j.is_number_integer() || j.get<long>() < 1)
    throw InvalidInput("capability must be a positive integer or \"inf\"");
  return Capability(static_cast<int>(j.get<long>()));
}

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(std::string("missing required key \"") + key + "\"");
  return *it;
}

}  // namespace

MatrixXd matrix_from_json(const json& j) {
  const int rows = require(j, "rows").get<int>();
  const int cols = require(j, "cols").get<int>();
  const auto& data = require(j, "data");
  if (rows < 1 || cols < 1 || !data.is_array() ||
      static_cast<int>(data.size()) != rows * cols)
    throw InvalidInput("matrix needs rows*cols numeric entries in row-major order");
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = data[i * cols + c].get<double>();
  return m;
}

nlohmann::json matrix_to_json(const MatrixXd& m) {
  json j;
  j["rows"] = static_cast<int>(m.rows());
  j["cols"] = static_cast<int>(m.cols());
  json data = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = std::move(data);
  return j;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string capability_to_json(const Capability& c) {
  return c.is_inf() ? "inf" : std::to_string(c.value());
}

GameInstance parse_game(const json& j) {
  GameInstance g;
  const std::string fam = require(j, "family").get<std::string>();
  const double tie_tol = j.value("tie_tol", 1e-12);
  const double rank_tol = j.value("rank_tol", 1e-9);
  g.zero_sum = require(j, "zero_sum").get<bool>();
  const auto& caps = require(j, "capabilities");
  if (!caps.is_array() || caps.size() != 2)
    throw InvalidInput("\"capabilities\" must be a two-element array");
  g.c1 = capability_from_json(caps[0]);
  g.c2 = capability_from_json(caps[1]);

  if (fam == "table") {
    auto table = std::make_shared<TableFamily>();
    table->level_cap = require(j, "level_cap").get<int>();
    for (const auto& e : require(j, "universe")) {
      TableEntry entry;
      entry.id = require(e, "id").get<std::string>();
      entry.A = matrix_from_json(require(e, "A"));
      if (e.contains("B")) entry.B = matrix_from_json(e["B"]);
      table->universe.push_back(std::move(entry));
    }
    for (const auto& e : require(j, "map"))
      table->level_map[{require(e, "from").get<std::string>(),
                        require(e, "level").get<int>()}] = require(e, "to").get<std::string>();
    const auto report = validate_table_family(*table);
    if (!report.valid) {
      std::string msg = "table family fails validation";
      for (const auto& v : report.violations) msg += "; " + v;
      throw InvalidInput(msg);
    }
    if (g.zero_sum && !report.odd)
      throw InvalidInput("zero-sum table instances need an odd family");
    g.family = PerceptionFamily::make_table(std::move(table));
    g.perceived_id = require(j, "perceived_id").get<std::string>();
    const auto& entry = g.family.table->entry(*g.perceived_id);
    g.u1 = entry.A;
    if (g.zero_sum) {
      g.v1 = -entry.A;
    } else {
      if (!entry.B)
        throw InvalidInput("general-sum table entry '" + entry.id + "' lacks a column payoff");
      g.v1 = *entry.B;
    }
  } else {
    if (fam == "masked")
      g.family = PerceptionFamily::masked();
    else if (fam == "quantized")
      g.family = PerceptionFamily::quantized();
    else if (fam == "limited_rank")
      g.family = PerceptionFamily::limited_rank(tie_tol, rank_tol);
    else
      throw InvalidInput("unknown family \"" + fam + "\"");
    g.u1 = matrix_from_json(require(j, "perceived_row"));
    if (g.zero_sum) {
      g.v1 = -g.u1;
    } else {
      g.v1 = matrix_from_json(require(j, "perceived_col"));
      if (g.v1.rows() != g.u1.rows() || g.v1.cols() != g.u1.cols())
        throw InvalidInput("perceived matrices must share a shape");
    }
  }

  if (j.contains("true_row")) g.true_row = matrix_from_json(j["true_row"]);
  if (j.contains("true_col")) g.true_col = matrix_from_json(j["true_col"]);

  // perceived matrices must be fixed points at the lower capability; table
  // instances are fixed points by construction (perceived_id names a profile)
  if (g.family.kind != PerceptionFamily::Kind::Table) {
    const Capability cmin = min(g.c1, g.c2);
    if ((perceive(g.family, g.u1, cmin) - g.u1).lpNorm<Eigen::Infinity>() > 1e-9)
      throw InvalidInput("perceived_row is not a fixed point at the lower capability");
    if (!g.zero_sum &&
        (perceive(g.family, g.v1, cmin) - g.v1).lpNorm<Eigen::Infinity>() > 1e-9)
      throw InvalidInput("perceived_col is not a fixed point at the lower capability");
  }
  return g;
}

GameInstance load_game_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open game file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << "parse error in " << path << " at byte " << e.byte << ": " << e.what();
    throw InvalidInput(os.str());
  }
  return parse_game(j);
}

nlohmann::json game_to_json(const GameInstance& game) {
  json j;
  j["zero_sum"] = game.zero_sum;
  j["capabilities"] = json::array();
  auto cap = [](const Capability& c) -> json {
    if (c.is_inf()) return "inf";
    return c.value();
  };
  j["capabilities"].push_back(cap(game.c1));
  j["capabilities"].push_back(cap(game.c2));
  switch (game.family.kind) {
    case PerceptionFamily::Kind::Masked:
      j["family"] = "masked";
      break;
    case PerceptionFamily::Kind::Quantized:
      j["family"] = "quantized";
      break;
    case PerceptionFamily::Kind::LimitedRank:
      j["family"] = "limited_rank";
      j["tie_tol"] = game.family.tie_tol;
      j["rank_tol"] = game.family.rank_tol;
      break;
    case PerceptionFamily::Kind::Table: {
      j["family"] = "table";
      const auto& table = *game.family.table;
      j["level_cap"] = table.level_cap;
      json universe = json::array();
      for (const auto& e : table.universe) {
        json entry;
        entry["id"] = e.id;
        entry["A"] = matrix_to_json(e.A);
        if (e.B) entry["B"] = matrix_to_json(*e.B);
        universe.push_back(std::move(entry));
      }
      j["universe"] = std::move(universe);
      json map = json::array();
      for (const auto& [key, to] : table.level_map) {
        json e;
        e["from"] = key.first;
        e["level"] = key.second;
        e["to"] = to;
        map.push_back(std::move(e));
      }
      j["map"] = std::move(map);
      if (game.perceived_id) j["perceived_id"] = *game.perceived_id;
      break;
    }
  }
  if (game.family.kind != PerceptionFamily::Kind::Table) {
    j["perceived_row"] = matrix_to_json(game.u1);
    if (!game.zero_sum) j["perceived_col"] = matrix_to_json(game.v1);
  }
  if (game.true_row) j["true_row"] = matrix_to_json(*game.true_row);
  if (game.true_col) j["true_col"] = matrix_to_json(*game.true_col);
  return j;
}

void write_game_file(const GameInstance& game, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write game file: " + path);
  out << game_to_json(game).dump(2) << "\n";
}

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

nlohmann::json make_report(const std::string& command, const std::string& inputs_digest,
                           std::uint64_t seed, nlohmann::json payload, double elapsed_ms) {
  json j;
  j["command"] = command;
  j["inputs_digest"] = inputs_digest;
  j["seed"] = seed;
  j["payload"] = std::move(payload);
  const char* ci = std::getenv("OLP_CI");
  j["elapsed_ms"] = (ci && std::string(ci) == "1") ? 0.0 : elapsed_ms;
  return j;
}

}  // namespace olp

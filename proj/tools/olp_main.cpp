#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "olp/equilibrium.hpp"
#include "olp/game_io.hpp"

using namespace olp;
using nlohmann::json;

namespace {

bool ci_mode() {
  const char* ci = std::getenv("OLP_CI");
  return ci && std::string(ci) == "1";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open game file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

VectorXd parse_csv_vector(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw InvalidInput("cannot parse \"" + tok + "\" as a number");
    }
  }
  if (vals.empty()) throw InvalidInput("empty strategy vector");
  VectorXd v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

Capability parse_capability(const std::string& s) {
  if (s == "inf") return Capability::infinity();
  try {
    const int v = std::stoi(s);
    if (v >= 1) return Capability(v);
  } catch (const std::exception&) {
  }
  throw InvalidInput("capability must be a positive integer or \"inf\"");
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write output file: " + out_path);
  out << text << "\n";
}

json elem_to_json(const NarrowElem& e) {
  json j;
  if (e.id) j["id"] = *e.id;
  j["perception"] = matrix_to_json(e.perception);
  return j;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

json report_from(const PropertyReport& r) {
  json j;
  j["property"] = r.property;
  j["verdict"] = r.verdict;
  json w = json::array();
  for (const auto& x : r.witnesses) {
    json e;
    e["description"] = x.description;
    e["gap"] = x.gap;
    e["seed"] = x.seed;
    w.push_back(std::move(e));
  }
  j["witnesses"] = std::move(w);
  json stats;
  for (const auto& [k, v] : r.stats) stats[k] = v;
  j["stats"] = std::move(stats);
  return j;
}

// follower-side perception matrix used by best-response
MatrixXd follower_matrix(const GameInstance& g, const std::string& perception_id) {
  if (!perception_id.empty()) {
    if (g.family.kind != PerceptionFamily::Kind::Table)
      throw InvalidInput("--perception-id applies to table instances only");
    const auto& e = g.family.table->entry(perception_id);
    if (g.zero_sum) return e.A;
    if (!e.B) throw InvalidInput("entry '" + perception_id + "' lacks a column payoff");
    return *e.B;
  }
  return g.zero_sum ? g.u1 : g.v1;
}

int axioms_check(const GameInstance& g, int trials, std::uint64_t seed, json& payload) {
  if (g.family.kind == PerceptionFamily::Kind::Table) {
    const auto rep = validate_table_family(*g.family.table);
    payload["verdict"] = rep.valid && (!g.zero_sum || rep.odd) ? "holds" : "fails";
    payload["odd"] = rep.odd;
    payload["violations"] = rep.violations;
    return payload["verdict"] == "holds" ? 0 : 1;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  const int m = g.rows(), n = g.cols();
  int failures = 0, done = 0;
  std::string first_failure;
  while (done < trials) {
    MatrixXd u(m, n);
    for (int i = 0; i < m * n; ++i) u(i) = unif(rng);
    const Capability ca(1 + static_cast<int>(rng() % 6));
    const Capability cb(1 + static_cast<int>(rng() % 6));
    const double scale =
        g.family.kind == PerceptionFamily::Kind::LimitedRank ? 1e-9 * (1.0 + u.norm()) : 0.0;
    try {
      const MatrixXd a = perceive(g.family, u, ca);
      const MatrixXd path = perceive(g.family, a, cb);
      const MatrixXd direct = perceive(g.family, u, min(ca, cb));
      bool ok = (path - direct).lpNorm<Eigen::Infinity>() <= scale;
      ok = ok && (perceive(g.family, a, ca) - a).lpNorm<Eigen::Infinity>() <= scale;
      ok = ok && (perceive(g.family, u, Capability::infinity()) - u).lpNorm<Eigen::Infinity>() == 0;
      ok = ok &&
           (perceive(g.family, MatrixXd(-u), ca) + perceive(g.family, u, ca))
                   .lpNorm<Eigen::Infinity>() <= scale;
      if (!ok) {
        ++failures;
        if (first_failure.empty()) {
          std::ostringstream os;
          os << "trial " << done << " (levels " << ca.str() << "," << cb.str() << ")";
          first_failure = os.str();
        }
      }
      ++done;
    } catch (const DegenerateTie&) {
      // tied spectra are excluded from the axiom contract
    }
  }
  payload["verdict"] = failures == 0 ? "holds" : "fails";
  payload["trials"] = done;
  payload["failures"] = failures;
  if (failures > 0) payload["witness"] = first_failure;
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limited-perception matrix games: bounds, solvers and equilibrium tools"};
  app.require_subcommand(1);

  std::string format = "json", out_path;
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", out_path, "write the report here instead of stdout");

  std::string game_path, level_str = "inf", x_csv, y_csv, property, perception_id, eval_id;
  std::string reduce_out;
  int player = 1, trials = 100, grid = 64;
  long max_iters = 400000;
  int samples = 1000;
  double tol = 1e-5, eps = 1e-4, eps_prime = -1.0;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  auto add_game = [&](CLI::App* sub) {
    sub->fallthrough();
    sub->add_option("--game", game_path, "game file")->required();
  };

  auto* perceive_cmd = app.add_subcommand("perceive", "apply the perception map at a level");
  add_game(perceive_cmd);
  perceive_cmd->add_option("--level", level_str, "capability level (integer or inf)");

  auto* bounds_cmd = app.add_subcommand("bounds", "guaranteed payoff interval at a strategy pair");
  add_game(bounds_cmd);
  bounds_cmd->add_option("--player", player)->check(CLI::IsMember({1, 2}));
  bounds_cmd->add_option("--x", x_csv, "row strategy, comma separated");
  bounds_cmd->add_option("--y", y_csv, "column strategy, comma separated")->required();

  auto* maximin_cmd = app.add_subcommand("maximin", "maximize the guaranteed payoff");
  add_game(maximin_cmd);
  maximin_cmd->add_option("--tol", tol);
  maximin_cmd->add_option("--max-iters", max_iters);
  seed_opt = maximin_cmd->add_option("--seed", seed);

  auto* br_cmd = app.add_subcommand("best-response", "column player's bound-optimal reply");
  add_game(br_cmd);
  br_cmd->add_option("--x", x_csv)->required();
  br_cmd->add_option("--perception-id", perception_id);

  auto* check_cmd = app.add_subcommand("check", "property checks with witnesses");
  add_game(check_cmd);
  check_cmd
      ->add_option("--property", property)
      ->required()
      ->check(CLI::IsMember({"axioms", "constant-gap", "narrowly-reversible", "stackelberg-gap"}));
  check_cmd->add_option("--trials", trials);
  auto* check_seed = check_cmd->add_option("--seed", seed);
  check_cmd->add_option("--tol", tol);

  auto* eq_cmd = app.add_subcommand("equilibrium", "grid search for an equilibrium pair");
  add_game(eq_cmd);
  eq_cmd->add_option("--grid", grid);
  eq_cmd->add_option("--eps", eps);

  auto* repr_cmd = app.add_subcommand("compact-repr", "compact equilibrium representation");
  add_game(repr_cmd);
  repr_cmd->add_option("--grid", grid);
  repr_cmd->add_option("--eps", eps);
  repr_cmd->add_option("--eps-prime", eps_prime);
  repr_cmd->add_option("--eval-perception", eval_id);

  auto* reduce_cmd = app.add_subcommand("reduce", "general-sum to zero-sum table reduction");
  add_game(reduce_cmd);
  reduce_cmd->add_option("--out", reduce_out, "path of the emitted zero-sum game file")
      ->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "sampled bounds against the closed forms");
  add_game(oracle_cmd);
  oracle_cmd->add_option("--samples", samples);
  auto* oracle_seed = oracle_cmd->add_option("--seed", seed);
  oracle_cmd->add_option("--x", x_csv)->required();
  oracle_cmd->add_option("--y", y_csv)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    if (ci_mode()) {
      const bool randomized = (sub == maximin_cmd) ||
                              (sub == check_cmd && property != "axioms") || (sub == oracle_cmd);
      CLI::Option* used = sub == maximin_cmd ? seed_opt
                          : sub == check_cmd ? check_seed
                                             : oracle_seed;
      if (randomized && used->count() == 0)
        throw InvalidInput("CI mode requires an explicit --seed for randomized commands");
      if (sub == check_cmd && property == "axioms" && check_seed->count() == 0)
        throw InvalidInput("CI mode requires an explicit --seed for randomized commands");
    }
    if (format == "csv" && sub != bounds_cmd)
      throw InvalidInput("csv output is available for bounds sweeps only");

    Timer timer;
    const std::string digest = digest_hex(slurp(game_path));
    GameInstance game = load_game_file(game_path);
    json payload;
    int rc = 0;

    if (sub == perceive_cmd) {
      const Capability level = parse_capability(level_str);
      if (game.family.kind == PerceptionFamily::Kind::Table) {
        const std::string image = game.family.table->apply(*game.perceived_id, level);
        payload["perceived_id"] = image;
        payload["perceived_row"] = matrix_to_json(game.family.table->entry(image).A);
        const auto& B = game.family.table->entry(image).B;
        if (B) payload["perceived_col"] = matrix_to_json(*B);
      } else {
        const MatrixXd base_row = game.true_row ? *game.true_row : game.u1;
        payload["perceived_row"] = matrix_to_json(perceive(game.family, base_row, level));
        if (!game.zero_sum) {
          const MatrixXd base_col = game.true_col ? *game.true_col : game.v1;
          payload["perceived_col"] = matrix_to_json(perceive(game.family, base_col, level));
        }
      }
    } else if (sub == bounds_cmd) {
      const MatrixXd& mat = player == 1 ? game.u1 : game.v1;
      const Capability c = player == 1 ? game.c1 : game.c2;
      const VectorXd y = parse_csv_vector(y_csv);
      if (format == "csv") {
        if (game.rows() != 2)
          throw InvalidInput("csv bounds sweeps need a two-row game");
        std::ostringstream os;
        os << "t,lower,upper";
        os.precision(17);
        for (int k = 0; k <= 64; ++k) {
          const double t = static_cast<double>(k) / 64.0;
          VectorXd x(2);
          x << t, 1.0 - t;
          const auto b = payoff_bounds(game.family, mat, c, x, y);
          os << "\n" << t << "," << b.lower << "," << b.upper;
        }
        emit(os.str(), out_path);
        return 0;
      }
      if (x_csv.empty()) throw InvalidInput("--x is required for json bounds output");
      const VectorXd x = parse_csv_vector(x_csv);
      const auto b = payoff_bounds(game.family, mat, c, x, y);
      payload["lower"] = b.lower;
      payload["upper"] = b.upper;
      payload["player"] = player;
    } else if (sub == maximin_cmd) {
      const auto r = solve_maximin(game, tol, max_iters, seed);
      payload["x_star"] = vector_to_json(r.x_star);
      payload["value"] = r.value;
      payload["iterations"] = r.report.iterations;
      payload["certified_gap"] = r.report.certified_gap;
    } else if (sub == br_cmd) {
      const VectorXd x = parse_csv_vector(x_csv);
      const MatrixXd v2 = follower_matrix(game, perception_id);
      if (game.family.kind == PerceptionFamily::Kind::Table && !game.zero_sum) {
        // optimize the column player's own lower bound over the id's concretizations
        const auto& table = *game.family.table;
        const std::string wid = perception_id.empty() ? *game.perceived_id : perception_id;
        double best = -1e300;
        VectorXd ybest = VectorXd::Zero(game.cols());
        for (int k = 0; k < game.cols(); ++k) {
          VectorXd y = VectorXd::Zero(game.cols());
          y[k] = 1.0;
          double lo = 1e300;
          for (const int idx : table_concretization(table, wid, game.c2)) {
            const auto& B = table.universe[idx].B;
            if (!B) throw InvalidInput("entry lacks a column payoff");
            lo = std::min(lo, x.dot(*B * y));
          }
          if (lo > best) {
            best = lo;
            ybest = y;
          }
        }
        payload["y"] = vector_to_json(ybest);
        payload["bound"] = best;
        payload["objective"] = "lower";
      } else {
        const VectorXd y = game.zero_sum
                               ? best_response_upper(game, v2, game.c2, x, 1e-8)
                               : best_response_lower(game, v2, game.c2, x, 1e-8);
        const auto b = payoff_bounds(game.family, v2, game.c2, x, y);
        payload["y"] = vector_to_json(y);
        payload["bound"] = game.zero_sum ? b.upper : b.lower;
        payload["objective"] = game.zero_sum ? "upper" : "lower";
      }
    } else if (sub == check_cmd) {
      if (property == "axioms") {
        rc = axioms_check(game, trials, seed, payload);
      } else if (property == "constant-gap") {
        const auto rep = check_constant_gap(game.family, game.c1, trials, seed);
        payload = report_from(rep);
        rc = rep.verdict == "fails" ? 1 : 0;
      } else if (property == "narrowly-reversible") {
        const double use_tol = tol == 1e-5 ? 1e-6 : tol;
        const auto rep = check_narrowly_reversible(game, trials, seed, use_tol);
        payload = report_from(rep);
        rc = rep.verdict == "fails" ? 1 : 0;
      } else {  // stackelberg-gap
        const double use_tol = tol == 1e-5 ? 1e-4 : tol;
        const auto mm = solve_maximin(game, 1e-5, 400000, seed);
        const auto probe = stackelberg_gap_probe(game, mm.x_star, trials, seed + 1, use_tol);
        payload["x_star"] = vector_to_json(mm.x_star);
        payload["h1"] = probe.h1;
        payload["g_upper"] = probe.g_upper;
        payload["g_lower_est"] = probe.g_lower_est;
        payload["gap"] = probe.g_lower_est - probe.h1;
        rc = probe.g_lower_est - probe.h1 <= use_tol ? 0 : 1;
      }
    } else if (sub == eq_cmd) {
      const auto r = search_nash_table(game, grid, eps);
      if (!r) {
        payload["found"] = false;
        rc = 1;
      } else {
        payload["found"] = true;
        payload["x_star"] = vector_to_json(r->x_star);
        payload["value"] = r->value;
        json resp = json::array();
        for (std::size_t i = 0; i < r->Ry.elements.size(); ++i) {
          json e = elem_to_json(r->Ry.elements[i]);
          e["y"] = vector_to_json(r->Ry.responses[i]);
          resp.push_back(std::move(e));
        }
        payload["responses"] = std::move(resp);
        const auto rep =
            verify_nash(game, r->x_star, ResponseFunction::from(r->Ry), eps, 2000, 7);
        payload["max_deviation_p1"] = rep.max_deviation_p1;
        payload["max_deviation_p2"] = rep.max_deviation_p2;
      }
    } else if (sub == repr_cmd) {
      const auto r = search_nash_table(game, grid, eps);
      if (!r) throw InvalidInput("no equilibrium candidate found on the grid");
      if (eps_prime < 0)
        eps_prime = game.family.kind == PerceptionFamily::Kind::Table ? 0.0 : 1e-6;
      const auto repr = build_compact_repr(game, r->x_star, r->Ry, eps, eps_prime);
      payload["x_star"] = vector_to_json(repr.x_star);
      payload["f_star"] = repr.f_star;
      payload["eps"] = repr.eps;
      payload["eps_prime"] = repr.eps_prime;
      json anchors = json::array();
      for (const auto& [e, y] : repr.anchors) {
        json a = elem_to_json(e);
        a["y"] = vector_to_json(y);
        anchors.push_back(std::move(a));
      }
      payload["anchors"] = std::move(anchors);
      if (!eval_id.empty()) {
        if (game.family.kind != PerceptionFamily::Kind::Table)
          throw InvalidInput("--eval-perception applies to table instances only");
        NarrowElem e;
        e.id = eval_id;
        e.perception = game.family.table->entry(eval_id).A;
        payload["eval_response"] = vector_to_json(eval_compact_repr(game, repr, e));
      }
    } else if (sub == reduce_cmd) {
      const auto red = reduce_general_to_zero_sum(game);
      write_game_file(red.game, reduce_out);
      payload["reduced_file"] = reduce_out;
      payload["k_p"] = red.mapping.k_p;
      payload["b_p"] = red.mapping.b_p;
      payload["k_n"] = red.mapping.k_n;
      payload["b_n"] = red.mapping.b_n;
      payload["m"] = red.mapping.m;
      json em = json::array();
      for (const auto& [from, to] : red.mapping.element_map) {
        json e;
        e["element"] = from;
        e["reduced"] = to;
        em.push_back(std::move(e));
      }
      payload["element_map"] = std::move(em);
    } else if (sub == oracle_cmd) {
      const VectorXd x = parse_csv_vector(x_csv);
      const VectorXd y = parse_csv_vector(y_csv);
      const auto closed = payoff_bounds(game.family, game.u1, game.c1, x, y);
      const auto sampled =
          bounds_sampling_oracle(game.family, game.u1, game.c1, x, y, samples, seed);
      payload["closed_lower"] = closed.lower;
      payload["closed_upper"] = closed.upper;
      payload["sampled_lower"] = sampled.lower;
      payload["sampled_upper"] = sampled.upper;
      payload["max_deviation"] =
          std::max(std::abs(closed.lower - sampled.lower), std::abs(closed.upper - sampled.upper));
    }

    const json report = make_report(command, digest, seed, std::move(payload), timer.ms());
    emit(report.dump(2), out_path);
    return rc;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

#include "consensus/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "consensus/model.hpp"

namespace consensus {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown field");
  }
}

const json& require(const json& obj, const std::string& path,
                    const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing field \"") + key + "\"");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

/// Accepts a flat row-major array of rows*cols numbers or an array of
/// `rows` rows with `cols` numbers each.
Matrix parse_matrix(const json& v, int rows, int cols,
                    const std::string& path) {
  Matrix M(rows, cols);
  if (!v.is_array()) fail(path, "expected an array");
  if (!v.empty() && v.front().is_array()) {
    if (static_cast<int>(v.size()) != rows) {
      fail(path, "expected " + std::to_string(rows) + " rows");
    }
    for (int r = 0; r < rows; ++r) {
      const json& row = v[r];
      if (!row.is_array() || static_cast<int>(row.size()) != cols) {
        fail(path + "[" + std::to_string(r) + "]",
             "expected " + std::to_string(cols) + " numbers");
      }
      for (int c = 0; c < cols; ++c) {
        M(r, c) = as_number(row[c], path);
      }
    }
    return M;
  }
  if (static_cast<int>(v.size()) != rows * cols) {
    fail(path, "expected " + std::to_string(rows * cols) +
                   " numbers (row-major " + std::to_string(rows) + "x" +
                   std::to_string(cols) + ")");
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      M(r, c) = as_number(v[r * cols + c], path);
    }
  }
  return M;
}

Vector parse_vector(const json& v, int len, const std::string& path) {
  const Matrix M = parse_matrix(v, 1, len, path);
  return M.row(0).transpose();
}

AgentDynamics parse_agent(const json& v, int n, int m,
                          const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
  reject_unknown(v, path, {"A", "B"});
  AgentDynamics ag;
  ag.A = parse_matrix(require(v, path, "A"), n, n, path + ".A");
  ag.B = parse_matrix(require(v, path, "B"), n, m, path + ".B");
  return ag;
}

std::vector<Matrix> parse_gain_list(const json& v, int N, int m, int n,
                                    const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != N) {
    fail(path, "expected " + std::to_string(N) + " gain matrices");
  }
  std::vector<Matrix> out;
  out.reserve(N);
  for (int i = 0; i < N; ++i) {
    out.push_back(
        parse_matrix(v[i], m, n, path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

RunConfig parse_config_json(const json& doc) {
  const std::string root = "config";
  if (!doc.is_object()) fail(root, "expected a JSON object");
  reject_unknown(doc, root,
                 {"dims", "leader", "followers", "edges", "protocol", "gains",
                  "design", "sim", "tolerances"});

  const json& dims = require(doc, root, "dims");
  reject_unknown(dims, root + ".dims", {"n", "m", "N"});
  const int n = as_int(require(dims, root + ".dims", "n"), root + ".dims.n");
  const int m = as_int(require(dims, root + ".dims", "m"), root + ".dims.m");
  const int N = as_int(require(dims, root + ".dims", "N"), root + ".dims.N");
  if (n < 1 || m < 1 || N < 1) fail(root + ".dims", "n, m, N must be >= 1");

  std::vector<AgentDynamics> agents;
  agents.push_back(parse_agent(require(doc, root, "leader"), n, m,
                               root + ".leader"));
  const json& followers = require(doc, root, "followers");
  if (!followers.is_array() || static_cast<int>(followers.size()) != N) {
    fail(root + ".followers", "expected " + std::to_string(N) + " followers");
  }
  for (int i = 0; i < N; ++i) {
    agents.push_back(parse_agent(followers[i], n, m,
                                 root + ".followers[" + std::to_string(i) +
                                     "]"));
  }

  MatrixWeightedDigraph graph;
  graph.node_count = N + 1;
  const json& edges = require(doc, root, "edges");
  if (!edges.is_array()) fail(root + ".edges", "expected an array");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string epath = root + ".edges[" + std::to_string(e) + "]";
    const json& ej = edges[e];
    if (!ej.is_object()) fail(epath, "expected an object");
    reject_unknown(ej, epath, {"from", "to", "weight"});
    WeightedEdge edge;
    edge.from = as_int(require(ej, epath, "from"), epath + ".from");
    edge.to = as_int(require(ej, epath, "to"), epath + ".to");
    edge.weight =
        parse_matrix(require(ej, epath, "weight"), n, n, epath + ".weight");
    graph.edges.push_back(std::move(edge));
  }

  RunConfig cfg;
  cfg.system = validate_system(std::move(agents), std::move(graph));

  const json& proto = require(doc, root, "protocol");
  if (!proto.is_string()) fail(root + ".protocol", "expected a string");
  const std::string pname = proto.get<std::string>();
  if (pname == "dst") {
    cfg.protocol = Protocol::kDst;
  } else if (pname == "all-neighbors") {
    cfg.protocol = Protocol::kAllNeighbors;
  } else {
    fail(root + ".protocol", "expected \"dst\" or \"all-neighbors\"");
  }

  if (doc.contains("gains")) {
    const json& g = doc["gains"];
    reject_unknown(g, root + ".gains", {"G", "K"});
    GainSet gains;
    gains.G = parse_gain_list(require(g, root + ".gains", "G"), N, m, n,
                              root + ".gains.G");
    gains.K = parse_gain_list(require(g, root + ".gains", "K"), N, m, n,
                              root + ".gains.K");
    cfg.gains = std::move(gains);
  }

  if (doc.contains("design")) {
    const json& d = doc["design"];
    reject_unknown(d, root + ".design", {"rate"});
    cfg.design_rate = as_number(require(d, root + ".design", "rate"),
                                root + ".design.rate");
    if (!(cfg.design_rate > 0)) fail(root + ".design.rate", "must be > 0");
  }

  cfg.sim.initial_states.assign(N + 1, Vector::Zero(n));
  if (doc.contains("sim")) {
    const json& s = doc["sim"];
    const std::string spath = root + ".sim";
    reject_unknown(s, spath,
                   {"t_end", "dt", "initial_states", "leader_input",
                    "divergence_guard"});
    if (s.contains("t_end")) {
      cfg.sim.t_end = as_number(s["t_end"], spath + ".t_end");
    }
    if (s.contains("dt")) cfg.sim.dt = as_number(s["dt"], spath + ".dt");
    if (s.contains("divergence_guard")) {
      cfg.sim.divergence_guard =
          as_number(s["divergence_guard"], spath + ".divergence_guard");
    }
    if (s.contains("initial_states")) {
      const json& init = s["initial_states"];
      if (!init.is_array() || static_cast<int>(init.size()) != N + 1) {
        fail(spath + ".initial_states",
             "expected " + std::to_string(N + 1) + " state vectors");
      }
      for (int i = 0; i <= N; ++i) {
        cfg.sim.initial_states[i] =
            parse_vector(init[i], n,
                         spath + ".initial_states[" + std::to_string(i) + "]");
      }
    }
    if (s.contains("leader_input")) {
      const json& li = s["leader_input"];
      const std::string lpath = spath + ".leader_input";
      reject_unknown(li, lpath, {"kind", "value"});
      const json& kind = require(li, lpath, "kind");
      if (!kind.is_string()) fail(lpath + ".kind", "expected a string");
      const std::string kname = kind.get<std::string>();
      if (kname == "zero") {
        cfg.sim.leader_input.kind = LeaderInput::Kind::kZero;
      } else if (kname == "constant") {
        cfg.sim.leader_input.kind = LeaderInput::Kind::kConstant;
        cfg.sim.leader_input.value =
            parse_vector(require(li, lpath, "value"), m, lpath + ".value");
      } else {
        fail(lpath + ".kind", "expected \"zero\" or \"constant\"");
      }
    }
  }

  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    const std::string tpath = root + ".tolerances";
    reject_unknown(t, tpath,
                   {"hurwitz_margin", "rank_tol_scale", "gerschgorin_grid"});
    if (t.contains("hurwitz_margin")) {
      cfg.tolerances.hurwitz_margin =
          as_number(t["hurwitz_margin"], tpath + ".hurwitz_margin");
    }
    if (t.contains("rank_tol_scale")) {
      cfg.tolerances.rank_tol_scale =
          as_number(t["rank_tol_scale"], tpath + ".rank_tol_scale");
    }
    if (t.contains("gerschgorin_grid")) {
      cfg.tolerances.gerschgorin_grid =
          as_int(t["gerschgorin_grid"], tpath + ".gerschgorin_grid");
      if (cfg.tolerances.gerschgorin_grid < 10) {
        fail(tpath + ".gerschgorin_grid", "grid too coarse (< 10)");
      }
    }
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column for the error message.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError(path + ":" + std::to_string(line) + ":" +
                          std::to_string(col) + ": " + e.what());
  }
  return parse_config_json(doc);
}

}  // namespace consensus
